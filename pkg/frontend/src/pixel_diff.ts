/**
 * Diff view support: count changed pixels between two RGBA buffers of the
 * same size and produce a highlight overlay (changed pixels in red).
 */

export interface DiffResult {
  changed: number;
  total: number;
  /** RGBA overlay, same size as the inputs */
  overlay: Uint8ClampedArray;
}

export function diffPixels(
  a: Uint8ClampedArray,
  b: Uint8ClampedArray,
  width: number,
  height: number,
): DiffResult {
  const total = width * height;
  if (a.length !== total * 4 || b.length !== total * 4) {
    throw new Error(
      `buffer size mismatch: ${a.length}/${b.length} vs ${total * 4} expected`,
    );
  }
  const overlay = new Uint8ClampedArray(total * 4);
  let changed = 0;
  for (let i = 0; i < total; i++) {
    const o = i * 4;
    const same =
      a[o] === b[o] && a[o + 1] === b[o + 1] && a[o + 2] === b[o + 2] && a[o + 3] === b[o + 3];
    if (!same) {
      changed++;
      overlay[o] = 255;
      overlay[o + 3] = 255;
    }
  }
  return { changed, total, overlay };
}

/** Byte-level comparison of two fetched PNG payloads. */
export function sameBytes(a: Uint8Array, b: Uint8Array): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (a[i] !== b[i]) return false;
  }
  return true;
}
