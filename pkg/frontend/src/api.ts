// Typed client for the rendering service. Every UI gesture maps onto exactly
// one of these calls; the client holds no volume data or rendering logic.

export type Vec3 = [number, number, number];

export interface CameraState {
  eye: Vec3;
  look_at: Vec3;
  up: Vec3;
  vfov: number;
  image_dims: [number, number];
}

export interface TfEntry {
  alpha: number;
  rgb: Vec3;
}

export interface TransferFunctionDoc {
  isovalue: number;
  delta_v: number;
  std_sample_distance: number;
  entries: TfEntry[];
  mode: "shallow" | "deep";
  deep_step?: number;
  deep_max_steps?: number;
}

export interface SegmentResult {
  node_count: number;
  cut_weight: number;
  solve_ms: number;
}

export interface StructureInfo {
  id: number;
  isovalue: number;
  mode: string;
  cells: number;
}

export type SeedTarget = "fg" | "bg";

export interface SyntheticSpecDoc {
  kind: string;
  dims: number | number[];
  params?: number[];
}

async function jsonOrThrow(res: Response): Promise<any> {
  if (!res.ok) {
    let detail = `${res.status}`;
    try {
      detail = JSON.stringify((await res.json()).detail);
    } catch {
      /* body not json */
    }
    throw new Error(`${res.url}: ${res.status} ${detail}`);
  }
  return res.json();
}

export class ServiceClient {
  constructor(
    readonly baseUrl: string,
    private fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async post(path: string, body: unknown): Promise<any> {
    return jsonOrThrow(await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }));
  }

  private async put(path: string, body: unknown): Promise<any> {
    return jsonOrThrow(await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }));
  }

  async createSession(init: { volume?: string; synthetic?: SyntheticSpecDoc;
                              image_dims?: [number, number] }): Promise<string> {
    const out = await this.post("/sessions", init);
    return out.id as string;
  }

  async setCamera(sid: string, cam: CameraState): Promise<number> {
    const out = await this.put(`/sessions/${sid}/camera`, cam);
    return out.revision as number;
  }

  async setIso(sid: string, isovalue: number,
               tf?: TransferFunctionDoc): Promise<number> {
    const out = await this.put(`/sessions/${sid}/iso`, { isovalue, tf });
    return out.revision as number;
  }

  async setPeelWindows(sid: string, rects: number[][]): Promise<number> {
    const out = await this.post(`/sessions/${sid}/peel-windows`, { rects });
    return out.revision as number;
  }

  async clearPeelWindows(sid: string): Promise<void> {
    await jsonOrThrow(await this.fetchFn(
      `${this.baseUrl}/sessions/${sid}/peel-windows`, { method: "DELETE" }));
  }

  async pick(sid: string, pixels: [number, number][],
             target: SeedTarget): Promise<number[]> {
    const out = await this.post(`/sessions/${sid}/pick`, { pixels, target });
    return out.added as number[];
  }

  async clearSeeds(sid: string): Promise<void> {
    await jsonOrThrow(await this.fetchFn(
      `${this.baseUrl}/sessions/${sid}/seeds`, { method: "DELETE" }));
  }

  async segment(sid: string): Promise<SegmentResult> {
    return await this.post(`/sessions/${sid}/segment`, {});
  }

  async bakeStructure(sid: string, side: SeedTarget, id: number,
                      isovalue?: number, tf?: TransferFunctionDoc): Promise<void> {
    await this.post(`/sessions/${sid}/structures`, { side, id, isovalue, tf });
  }

  async structures(sid: string): Promise<StructureInfo[]> {
    const out = await jsonOrThrow(
      await this.fetchFn(`${this.baseUrl}/sessions/${sid}/structures`));
    return out.structures as StructureInfo[];
  }

  async frame(sid: string): Promise<{ revision: number; png: ArrayBuffer }> {
    const res = await this.fetchFn(`${this.baseUrl}/sessions/${sid}/frame`);
    if (!res.ok) {
      throw new Error(`frame fetch failed: ${res.status}`);
    }
    return {
      revision: Number(res.headers.get("x-revision") ?? "0"),
      png: await res.arrayBuffer(),
    };
  }

  async exportScene(sid: string, path: string): Promise<string> {
    const out = await this.post(`/sessions/${sid}/export`, { path });
    return out.scene as string;
  }

  streamUrl(sid: string): string {
    return `${this.baseUrl.replace(/^http/, "ws")}/sessions/${sid}/stream`;
  }
}

export function rampTf(near: Vec3, far: Vec3, isovalue: number,
                       deltaV = 0.1, std = 0.02, n = 16,
                       mode: "shallow" | "deep" = "shallow"): TransferFunctionDoc {
  const entries: TfEntry[] = [];
  for (let i = 1; i <= n; i++) {
    const f = (i - 1) / Math.max(n - 1, 1);
    entries.push({
      alpha: i / n,
      rgb: [
        near[0] * (1 - f) + far[0] * f,
        near[1] * (1 - f) + far[1] * f,
        near[2] * (1 - f) + far[2] * f,
      ],
    });
  }
  return { isovalue, delta_v: deltaV, std_sample_distance: std, entries, mode };
}
