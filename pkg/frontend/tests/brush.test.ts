import { describe, expect, it } from "vitest";

import { discPixels, strokeSegmentPixels } from "../src/brush.js";

describe("discPixels", () => {
  it("radius 0 is the single center pixel", () => {
    expect(discPixels(5, 7, 0, 16, 16)).toEqual([[5, 7]]);
  });

  it("radius 3 covers the 29-pixel disc", () => {
    // |{(dx,dy) : dx^2+dy^2 <= 9}| = 29
    expect(discPixels(8, 8, 3, 32, 32)).toHaveLength(29);
  });

  it("clamps to the image bounds", () => {
    const px = discPixels(0, 0, 3, 16, 16);
    expect(px.every(([x, y]) => x >= 0 && y >= 0)).toBe(true);
    expect(px.length).toBeLessThan(29);
  });

  it("contains only pixels within the radius", () => {
    for (const [x, y] of discPixels(10, 12, 3, 64, 64)) {
      expect((x - 10) ** 2 + (y - 12) ** 2).toBeLessThanOrEqual(9);
    }
  });
});

describe("strokeSegmentPixels", () => {
  it("covers both endpoints", () => {
    const px = strokeSegmentPixels(2, 2, 12, 2, 1, 32, 32);
    const set = new Set(px.map(([x, y]) => `${x},${y}`));
    expect(set.has("2,2")).toBe(true);
    expect(set.has("12,2")).toBe(true);
  });

  it("has no duplicates", () => {
    const px = strokeSegmentPixels(0, 0, 20, 13, 3, 64, 64);
    const set = new Set(px.map(([x, y]) => `${x},${y}`));
    expect(set.size).toBe(px.length);
  });

  it("leaves no gaps along the path", () => {
    const px = strokeSegmentPixels(4, 4, 24, 4, 2, 64, 64);
    const set = new Set(px.map(([x, y]) => `${x},${y}`));
    for (let x = 4; x <= 24; x++) {
      expect(set.has(`${x},4`)).toBe(true);
    }
  });
});
