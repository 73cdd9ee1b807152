// Session-side UI state: tool mode, stroke batching, structure mirror, and
// the revision gate that keeps stale frames off the canvas.

import type { SegmentResult, SeedTarget, StructureInfo } from "./api.js";

export type ToolMode = "orbit" | "peel" | "seed-fg" | "seed-bg";

export interface FrameMessage {
  revision: number;
  png: Uint8Array;
}

export class UiSessionState {
  sessionId: string | null = null;
  toolMode: ToolMode = "orbit";
  displayedRevision = 0;
  structures: StructureInfo[] = [];
  lastSegment: SegmentResult | null = null;

  private pendingStroke: [number, number][] = [];
  private seedCount: Record<SeedTarget, number> = { fg: 0, bg: 0 };

  /** Revision gate: true when the frame is new enough to paint. */
  acceptFrame(revision: number): boolean {
    if (revision < this.displayedRevision) {
      return false;
    }
    this.displayedRevision = revision;
    return true;
  }

  get strokePending(): boolean {
    return this.pendingStroke.length > 0;
  }

  extendStroke(pixels: [number, number][]): void {
    this.pendingStroke.push(...pixels);
  }

  /** Drain the batched stroke for a /pick flush (deduplicated). */
  takeStroke(): [number, number][] {
    const seen = new Set<number>();
    const out: [number, number][] = [];
    for (const [x, y] of this.pendingStroke) {
      const key = y * 1_000_000 + x;
      if (!seen.has(key)) {
        seen.add(key);
        out.push([x, y]);
      }
    }
    this.pendingStroke = [];
    return out;
  }

  recordPicked(target: SeedTarget, added: number[]): void {
    this.seedCount[target] += added.length;
  }

  clearSeeds(): void {
    this.seedCount = { fg: 0, bg: 0 };
    this.pendingStroke = [];
  }

  /** Segmentation is available once both seed sets exist and every stroke
   *  has been flushed to /pick. */
  get canSegment(): boolean {
    return !this.strokePending && this.seedCount.fg > 0 && this.seedCount.bg > 0;
  }
}
