// WebSocket frame stream: binary pushes are 4 big-endian revision bytes
// followed by a PNG. Commands go up as JSON text; replies come back as JSON.
// A lost socket reconnects with exponential backoff and a /frame refetch to
// resynchronize.

export interface StreamFrame {
  revision: number;
  png: Uint8Array;
}

export function parseFramePayload(data: ArrayBuffer): StreamFrame {
  if (data.byteLength < 4) {
    throw new Error(`frame payload too short: ${data.byteLength} bytes`);
  }
  const view = new DataView(data);
  return {
    revision: view.getUint32(0, false),
    png: new Uint8Array(data, 4),
  };
}

export function backoffDelays(baseMs = 250, capMs = 8000): (attempt: number) => number {
  return (attempt: number) => Math.min(capMs, baseMs * 2 ** Math.max(0, attempt));
}

type WsLike = {
  binaryType: string;
  onopen: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  send(data: string): void;
  close(): void;
};

export interface FrameStreamOptions {
  wsFactory?: (url: string) => WsLike;
  schedule?: (cb: () => void, ms: number) => unknown;
  backoff?: (attempt: number) => number;
  onFrame?: (frame: StreamFrame) => void;
  onReply?: (reply: Record<string, unknown>) => void;
  /** Called after a reconnect so the app can refetch /frame. */
  onResync?: () => void;
  onStatus?: (connected: boolean) => void;
}

export class FrameStream {
  private ws: WsLike | null = null;
  private attempt = 0;
  private closed = false;
  private readonly opts: Required<Pick<FrameStreamOptions, "backoff">> & FrameStreamOptions;

  constructor(readonly url: string, opts: FrameStreamOptions = {}) {
    this.opts = { backoff: backoffDelays(), ...opts };
  }

  connect(): void {
    if (this.closed) {
      return;
    }
    const factory = this.opts.wsFactory
      ?? ((u: string) => new WebSocket(u) as unknown as WsLike);
    const ws = factory(this.url);
    ws.binaryType = "arraybuffer";
    ws.onopen = () => {
      const reconnected = this.attempt > 0;
      this.attempt = 0;
      this.opts.onStatus?.(true);
      if (reconnected) {
        this.opts.onResync?.();
      }
    };
    ws.onmessage = (ev) => {
      if (typeof ev.data === "string") {
        this.opts.onReply?.(JSON.parse(ev.data));
      } else if (ev.data instanceof ArrayBuffer) {
        this.opts.onFrame?.(parseFramePayload(ev.data));
      }
    };
    ws.onerror = () => { /* close follows */ };
    ws.onclose = () => {
      this.opts.onStatus?.(false);
      this.ws = null;
      if (!this.closed) {
        const delay = this.opts.backoff(this.attempt);
        this.attempt += 1;
        (this.opts.schedule ?? setTimeout)(() => this.connect(), delay);
      }
    };
    this.ws = ws;
  }

  send(command: Record<string, unknown>): boolean {
    if (!this.ws) {
      return false;
    }
    this.ws.send(JSON.stringify(command));
    return true;
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
