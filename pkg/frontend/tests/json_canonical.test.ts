import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { canonicalJson, formatFloat } from "../src/json_canonical.js";

const FIXTURES = join(__dirname, "fixtures");

function bitsToDouble(hex: string): number {
  const buf = Buffer.from(hex, "hex");
  return buf.readDoubleBE(0);
}

describe("canonicalJson", () => {
  it("sorts keys recursively and uses compact separators", () => {
    const out = canonicalJson({ b: 1, a: { d: [1, 2], c: "x" } });
    expect(out).toBe('{"a":{"c":"x","d":[1,2]},"b":1}');
  });

  it("renders integral floats as plain integers", () => {
    expect(canonicalJson([1.0, -3.0, 100.0, 0.0, -0.0])).toBe("[1,-3,100,0,0]");
  });

  it("rejects non-finite numbers", () => {
    expect(() => canonicalJson(Number.NaN)).toThrow();
    expect(() => canonicalJson(Infinity)).toThrow();
  });

  it("matches the server's serialization for every float in the table", () => {
    const table = JSON.parse(
      readFileSync(join(FIXTURES, "float_table.json"), "utf8"),
    ) as { bits: string; canon: string }[];
    expect(table.length).toBeGreaterThan(30);
    for (const { bits, canon } of table) {
      const x = bitsToDouble(bits);
      expect(canonicalJson(x), `bits ${bits}`).toBe(canon);
    }
  });

  it("uses the server's scientific-notation thresholds", () => {
    expect(formatFloat(1e-4)).toBe("0.0001");
    expect(formatFloat(1e-5)).toBe("1e-05");
    expect(formatFloat(1.2e-5)).toBe("1.2e-05");
    expect(formatFloat(-1.2e-5)).toBe("-1.2e-05");
    expect(formatFloat(1.5e16)).toBe("1.5e+16");
    expect(formatFloat(0.1 + 0.2)).toBe("0.30000000000000004");
  });

  it("round-trips: parsing the output recovers the exact double", () => {
    const rng = [0.65, 1 / 3, Math.PI, 9.38720605798698, 5e-324, 1e300];
    for (const x of rng) {
      expect(Number(formatFloat(x))).toBe(x);
    }
  });
});
