/**
 * Fixed pseudo-color lookup table for the alpha / reliability / uncertainty
 * overlays.
 *
 * 256 RGB entries, piecewise-linear through five documented anchors
 * (dark blue -> cyan -> green -> yellow -> red), so screenshots are
 * comparable across runs and machines.
 */

const ANCHORS: Array<[number, [number, number, number]]> = [
  [0, [13, 8, 135]],
  [64, [34, 168, 221]],
  [128, [41, 175, 95]],
  [192, [228, 216, 52]],
  [255, [220, 36, 31]],
];

function buildLut(): Uint8Array {
  const lut = new Uint8Array(256 * 3);
  for (let seg = 0; seg < ANCHORS.length - 1; seg++) {
    const [x0, c0] = ANCHORS[seg];
    const [x1, c1] = ANCHORS[seg + 1];
    for (let x = x0; x <= x1; x++) {
      const t = (x - x0) / (x1 - x0);
      for (let ch = 0; ch < 3; ch++) {
        lut[x * 3 + ch] = Math.round(c0[ch] + t * (c1[ch] - c0[ch]));
      }
    }
  }
  return lut;
}

export const LUT: Uint8Array = buildLut();

/**
 * Map 8-bit grayscale RGBA pixels (as produced by drawing a frame PNG onto a
 * canvas) to pseudo-color RGBA with the given overlay opacity.
 */
export function colorize(
  grayRgba: Uint8ClampedArray,
  opacity: number,
): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(grayRgba.length);
  const a = Math.round(Math.min(Math.max(opacity, 0), 1) * 255);
  for (let i = 0; i < grayRgba.length; i += 4) {
    const g = grayRgba[i]; // R channel carries the gray value
    out[i] = LUT[g * 3];
    out[i + 1] = LUT[g * 3 + 1];
    out[i + 2] = LUT[g * 3 + 2];
    out[i + 3] = a;
  }
  return out;
}

/** CSS color for a LUT index, for legend gradients. */
export function lutCss(index: number): string {
  const i = Math.min(Math.max(Math.round(index), 0), 255) * 3;
  return `rgb(${LUT[i]}, ${LUT[i + 1]}, ${LUT[i + 2]})`;
}

/** Compact legend label for a scale bound. */
export function formatBound(value: number): string {
  if (!Number.isFinite(value)) return String(value);
  const magnitude = Math.abs(value);
  if (magnitude !== 0 && (magnitude < 1e-3 || magnitude >= 1e4)) return value.toExponential(2);
  return value.toFixed(3);
}
