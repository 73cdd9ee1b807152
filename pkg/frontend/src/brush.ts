// Seed brush geometry: every pixel under the brush disc, batched along the
// drag path so stroke density matches the pointer movement.

export function discPixels(cx: number, cy: number, radius: number,
                           width: number, height: number): [number, number][] {
  const out: [number, number][] = [];
  const r = Math.max(0, radius);
  const r2 = r * r;
  for (let y = Math.ceil(cy - r); y <= Math.floor(cy + r); y++) {
    for (let x = Math.ceil(cx - r); x <= Math.floor(cx + r); x++) {
      if (x < 0 || y < 0 || x >= width || y >= height) {
        continue;
      }
      const dx = x - cx;
      const dy = y - cy;
      if (dx * dx + dy * dy <= r2) {
        out.push([x, y]);
      }
    }
  }
  return out;
}

/** Pixels under the disc swept from (x0,y0) to (x1,y1), deduplicated. */
export function strokeSegmentPixels(x0: number, y0: number,
                                    x1: number, y1: number, radius: number,
                                    width: number, height: number): [number, number][] {
  const seen = new Set<number>();
  const out: [number, number][] = [];
  const steps = Math.max(1, Math.ceil(Math.hypot(x1 - x0, y1 - y0)));
  for (let k = 0; k <= steps; k++) {
    const t = k / steps;
    for (const [x, y] of discPixels(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t,
                                    radius, width, height)) {
      const key = y * 1_000_000 + x;
      if (!seen.has(key)) {
        seen.add(key);
        out.push([x, y]);
      }
    }
  }
  return out;
}

export const DEFAULT_BRUSH_RADIUS = 3;
