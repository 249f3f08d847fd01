/**
 * Canonical JSON serialization matching the server's `request-body` CLI
 * output byte for byte: recursively sorted object keys, compact separators,
 * integral floats rendered as plain integers, and non-integral floats
 * rendered with the server's float formatting rules (shortest round-trip
 * digits; scientific notation only when the decimal point position falls
 * outside (-4, 16], with a signed two-digit exponent).
 *
 * `JSON.stringify` alone is not enough: its scientific-notation thresholds
 * differ (e.g. it prints 0.00001 where the server prints 1e-05).
 */

export type JsonValue =
  | null
  | boolean
  | number
  | string
  | JsonValue[]
  | { [key: string]: JsonValue };

/** Shortest-round-trip digits of |x| and the position of the decimal
 * point, such that x = 0.digits * 10^decpt. */
function shortestDigits(x: number): { digits: string; decpt: number } {
  const s = Math.abs(x).toString();
  let mantissa = s;
  let exp = 0;
  const e = s.indexOf("e");
  if (e >= 0) {
    mantissa = s.slice(0, e);
    exp = parseInt(s.slice(e + 1), 10);
  }
  const dot = mantissa.indexOf(".");
  let digits = dot >= 0 ? mantissa.slice(0, dot) + mantissa.slice(dot + 1) : mantissa;
  let decpt = (dot >= 0 ? dot : mantissa.length) + exp;
  while (digits.length > 1 && digits.startsWith("0")) {
    digits = digits.slice(1);
    decpt -= 1;
  }
  while (digits.length > 1 && digits.endsWith("0")) {
    digits = digits.slice(0, -1);
  }
  return { digits, decpt };
}

/** Format a finite non-integral number the way the server does. */
export function formatFloat(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`non-finite number not allowed in request body: ${x}`);
  }
  const sign = x < 0 ? "-" : "";
  const { digits, decpt } = shortestDigits(x);
  if (decpt > -4 && decpt <= 16) {
    if (decpt <= 0) {
      return sign + "0." + "0".repeat(-decpt) + digits;
    }
    if (decpt >= digits.length) {
      return sign + digits + "0".repeat(decpt - digits.length) + ".0";
    }
    return sign + digits.slice(0, decpt) + "." + digits.slice(decpt);
  }
  const mantissa = digits.length > 1 ? digits[0] + "." + digits.slice(1) : digits;
  const e = decpt - 1;
  const eSign = e < 0 ? "-" : "+";
  const eDigits = Math.abs(e).toString().padStart(2, "0");
  return sign + mantissa + "e" + eSign + eDigits;
}

function formatNumber(x: number): string {
  if (Number.isInteger(x)) {
    // plain integer form, full decimal expansion even above 1e21
    if (Object.is(x, -0)) return "0";
    return Math.abs(x) >= 1e21 ? BigInt(x).toString() : x.toString();
  }
  return formatFloat(x);
}

function escapeString(s: string): string {
  // JSON.stringify's string escaping matches the server's ensure_ascii=False
  // output for the characters our schemas produce
  return JSON.stringify(s);
}

/** Serialize with recursively sorted keys and no whitespace. */
export function canonicalJson(value: JsonValue): string {
  if (value === null) return "null";
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "number") return formatNumber(value);
  if (typeof value === "string") return escapeString(value);
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const keys = Object.keys(value).sort();
  const parts = keys.map((k) => escapeString(k) + ":" + canonicalJson(value[k]!));
  return "{" + parts.join(",") + "}";
}
