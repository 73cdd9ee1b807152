import { describe, expect, it } from "vitest";

import { backoffDelays, FrameStream, parseFramePayload } from "../src/stream.js";

function framePayload(revision: number, png: number[]): ArrayBuffer {
  const buf = new ArrayBuffer(4 + png.length);
  new DataView(buf).setUint32(0, revision, false);
  new Uint8Array(buf, 4).set(png);
  return buf;
}

class FakeWs {
  binaryType = "blob";
  onopen: ((ev: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev: unknown) => void) | null = null;
  onerror: ((ev: unknown) => void) | null = null;
  sent: string[] = [];
  constructor(readonly url: string) {}
  send(data: string): void {
    this.sent.push(data);
  }
  close(): void {
    this.onclose?.({});
  }
}

describe("parseFramePayload", () => {
  it("splits big-endian revision and png bytes", () => {
    const frame = parseFramePayload(framePayload(0x01020304, [9, 8, 7]));
    expect(frame.revision).toBe(0x01020304);
    expect([...frame.png]).toEqual([9, 8, 7]);
  });

  it("rejects short payloads", () => {
    expect(() => parseFramePayload(new ArrayBuffer(2))).toThrow();
  });
});

describe("backoffDelays", () => {
  it("doubles from the base and caps", () => {
    const d = backoffDelays(250, 8000);
    expect([0, 1, 2, 3, 4, 5, 6].map(d)).toEqual(
      [250, 500, 1000, 2000, 4000, 8000, 8000]);
  });
});

describe("FrameStream", () => {
  it("dispatches frames and replies", () => {
    const sockets: FakeWs[] = [];
    const frames: number[] = [];
    const replies: unknown[] = [];
    const stream = new FrameStream("ws://x/stream", {
      wsFactory: (url) => {
        const ws = new FakeWs(url);
        sockets.push(ws);
        return ws;
      },
      onFrame: (f) => frames.push(f.revision),
      onReply: (r) => replies.push(r),
    });
    stream.connect();
    const ws = sockets[0];
    ws.onopen?.({});
    ws.onmessage?.({ data: framePayload(5, [1]) });
    ws.onmessage?.({ data: JSON.stringify({ ok: true, op: "camera" }) });
    expect(frames).toEqual([5]);
    expect(replies).toEqual([{ ok: true, op: "camera" }]);
    expect(ws.binaryType).toBe("arraybuffer");
  });

  it("reconnects with growing delays and resyncs", () => {
    const sockets: FakeWs[] = [];
    const delays: number[] = [];
    const timers: (() => void)[] = [];
    let resyncs = 0;
    const stream = new FrameStream("ws://x/stream", {
      wsFactory: (url) => {
        const ws = new FakeWs(url);
        sockets.push(ws);
        return ws;
      },
      schedule: (cb, ms) => {
        delays.push(ms);
        timers.push(cb);
      },
      onResync: () => { resyncs += 1; },
    });
    stream.connect();
    sockets[0].onopen?.({});
    sockets[0].close();          // drop -> schedule reconnect at 250
    timers.shift()!();
    sockets[1].close();          // fail again -> 500
    timers.shift()!();
    sockets[2].onopen?.({});     // back up -> resync once
    expect(delays).toEqual([250, 500]);
    expect(resyncs).toBe(1);
    expect(sockets).toHaveLength(3);
  });

  it("sends commands as json text", () => {
    const sockets: FakeWs[] = [];
    const stream = new FrameStream("ws://x/stream", {
      wsFactory: (url) => {
        const ws = new FakeWs(url);
        sockets.push(ws);
        return ws;
      },
    });
    stream.connect();
    expect(stream.send({ op: "segment" })).toBe(true);
    expect(JSON.parse(sockets[0].sent[0])).toEqual({ op: "segment" });
  });

  it("stops reconnecting after close", () => {
    const sockets: FakeWs[] = [];
    const delays: number[] = [];
    const stream = new FrameStream("ws://x/stream", {
      wsFactory: (url) => {
        const ws = new FakeWs(url);
        sockets.push(ws);
        return ws;
      },
      schedule: (cb, ms) => delays.push(ms),
    });
    stream.connect();
    stream.close();
    expect(delays).toEqual([]);
    expect(sockets).toHaveLength(1);
  });
});
