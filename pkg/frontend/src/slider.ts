/** Continuous quality slider: position in [0, 1], quantized to 0..39. */

export const SCORE_MAX = 39;

/** Likert anchors at equal fifths of the bar, worst to best. */
export const ANCHORS = ["Bad", "Poor", "Fair", "Good", "Excellent"] as const;

export function clampPosition(position: number): number {
  if (Number.isNaN(position)) return 0;
  return Math.min(1, Math.max(0, position));
}

/** Round-half-up quantization of the slider position onto the 0..39 scale. */
export function quantize(position: number): number {
  return Math.round(clampPosition(position) * SCORE_MAX);
}

/** Anchor label whose fifth of the bar contains the position. */
export function anchorFor(position: number): string {
  const p = clampPosition(position);
  const idx = Math.min(ANCHORS.length - 1, Math.floor(p * ANCHORS.length));
  return ANCHORS[idx];
}
