// Browser entry point: wires the canvas, toolbar, and dialogs to the service
// client. The server renders every frame; this file only routes gestures.

import { CameraState, rampTf, SeedTarget, ServiceClient } from "./api.js";
import { DEFAULT_BRUSH_RADIUS, strokeSegmentPixels } from "./brush.js";
import { CAMERA_THROTTLE_MS, makeThrottle, OrbitController } from "./orbit.js";
import { UiSessionState } from "./state.js";
import { FrameStream } from "./stream.js";

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

const state = new UiSessionState();
const baseUrl = location.origin;
const client = new ServiceClient(baseUrl);

const canvas = $<HTMLCanvasElement>("view");
const ctx = canvas.getContext("2d")!;
let stream: FrameStream | null = null;
let orbit: OrbitController | null = null;

function setStatus(text: string): void {
  $("status").textContent = text;
}

async function paintFrame(revision: number, png: Uint8Array | ArrayBuffer): Promise<void> {
  if (!state.acceptFrame(revision)) {
    return; // never paint a frame older than the displayed one
  }
  const bytes: ArrayBuffer = png instanceof Uint8Array
    ? (png.slice().buffer as ArrayBuffer)
    : png;
  const blob = new Blob([bytes], { type: "image/png" });
  const bitmap = await createImageBitmap(blob);
  canvas.width = bitmap.width;
  canvas.height = bitmap.height;
  ctx.drawImage(bitmap, 0, 0);
  $("revision").textContent = `rev ${revision}`;
}

async function refetchFrame(): Promise<void> {
  if (!state.sessionId) {
    return;
  }
  const { revision, png } = await client.frame(state.sessionId);
  await paintFrame(revision, png);
}

function currentCamera(): CameraState {
  return orbit!.camera;
}

const pushCamera = makeThrottle(CAMERA_THROTTLE_MS, (cam: CameraState) => {
  if (state.sessionId) {
    client.setCamera(state.sessionId, cam).catch((err) => setStatus(String(err)));
  }
});

function updateSegmentButton(): void {
  ($("segment") as HTMLButtonElement).disabled = !state.canSegment;
}

async function refreshStructures(): Promise<void> {
  if (!state.sessionId) {
    return;
  }
  state.structures = await client.structures(state.sessionId);
  $("structures").textContent = state.structures.length
    ? state.structures.map((s) =>
        `#${s.id} iso=${s.isovalue.toFixed(3)} ${s.mode} (${s.cells} cells)`).join("\n")
    : "(none)";
}

async function createSession(): Promise<void> {
  const kind = ($("phantom") as HTMLSelectElement).value;
  const sid = await client.createSession({
    synthetic: { kind, dims: 128 },
    image_dims: [512, 512],
  });
  state.sessionId = sid;
  state.clearSeeds();
  orbit = new OrbitController({
    eye: [1.35, 1.1, -0.9], look_at: [0.5, 0.5, 0.5], up: [0, 1, 0],
    vfov: 35, image_dims: [512, 512],
  });
  await client.setCamera(sid, orbit.camera);
  await client.setIso(sid, Number(($("iso") as HTMLInputElement).value),
                      currentTf());
  stream?.close();
  stream = new FrameStream(client.streamUrl(sid), {
    onFrame: (f) => void paintFrame(f.revision, f.png),
    onResync: () => void refetchFrame(),
    onStatus: (up) => setStatus(up ? "connected" : "reconnecting..."),
  });
  stream.connect();
  updateSegmentButton();
  await refreshStructures();
}

function currentTf() {
  const near = hexToRgb(($("near-color") as HTMLInputElement).value);
  const far = hexToRgb(($("far-color") as HTMLInputElement).value);
  const iso = Number(($("iso") as HTMLInputElement).value);
  const dv = Number(($("delta-v") as HTMLInputElement).value);
  const mode = ($("mode") as HTMLSelectElement).value as "shallow" | "deep";
  return rampTf(near, far, iso, dv, 0.02, 16, mode);
}

function hexToRgb(hex: string): [number, number, number] {
  const v = parseInt(hex.slice(1), 16);
  return [((v >> 16) & 255) / 255, ((v >> 8) & 255) / 255, (v & 255) / 255];
}

// ---- pointer handling -------------------------------------------------------

interface DragState {
  x: number;
  y: number;
  startX: number;
  startY: number;
}

let drag: DragState | null = null;

function canvasPixel(ev: PointerEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  const x = Math.floor((ev.clientX - rect.left) * canvas.width / rect.width);
  const y = Math.floor((ev.clientY - rect.top) * canvas.height / rect.height);
  return [Math.max(0, Math.min(canvas.width - 1, x)),
          Math.max(0, Math.min(canvas.height - 1, y))];
}

canvas.addEventListener("pointerdown", (ev) => {
  const [x, y] = canvasPixel(ev);
  drag = { x, y, startX: x, startY: y };
  canvas.setPointerCapture(ev.pointerId);
  if (state.toolMode === "seed-fg" || state.toolMode === "seed-bg") {
    state.extendStroke(strokeSegmentPixels(x, y, x, y, DEFAULT_BRUSH_RADIUS,
                                           canvas.width, canvas.height));
  }
});

canvas.addEventListener("pointermove", (ev) => {
  if (!drag || !state.sessionId) {
    return;
  }
  const [x, y] = canvasPixel(ev);
  if (state.toolMode === "orbit" && orbit) {
    orbit.rotate(x - drag.x, y - drag.y);
    pushCamera(currentCamera());
  } else if (state.toolMode === "seed-fg" || state.toolMode === "seed-bg") {
    state.extendStroke(strokeSegmentPixels(drag.x, drag.y, x, y,
                                           DEFAULT_BRUSH_RADIUS,
                                           canvas.width, canvas.height));
  }
  drag = { ...drag, x, y };
});

canvas.addEventListener("pointerup", async (ev) => {
  if (!drag || !state.sessionId) {
    drag = null;
    return;
  }
  const [x, y] = canvasPixel(ev);
  const sid = state.sessionId;
  const d = drag;
  drag = null;
  if (state.toolMode === "peel") {
    const rect = [Math.min(d.startX, x), Math.min(d.startY, y),
                  Math.abs(x - d.startX) + 1, Math.abs(y - d.startY) + 1];
    await client.setPeelWindows(sid, [rect]);
  } else if (state.toolMode === "seed-fg" || state.toolMode === "seed-bg") {
    const target: SeedTarget = state.toolMode === "seed-fg" ? "fg" : "bg";
    const pixels = state.takeStroke();
    const added = await client.pick(sid, pixels, target);
    state.recordPicked(target, added);
    if (added.length === 0) {
      setStatus("no surface under stroke");
    } else {
      setStatus(`added ${added.length} ${target} seed cells`);
    }
    updateSegmentButton();
  }
});

canvas.addEventListener("wheel", (ev) => {
  if (orbit && state.sessionId) {
    ev.preventDefault();
    orbit.zoom(ev.deltaY > 0 ? 1.1 : 1 / 1.1);
    pushCamera(currentCamera());
  }
});

// ---- toolbar ----------------------------------------------------------------

for (const mode of ["orbit", "peel", "seed-fg", "seed-bg"] as const) {
  $(`tool-${mode}`).addEventListener("click", () => {
    state.toolMode = mode;
    for (const other of ["orbit", "peel", "seed-fg", "seed-bg"]) {
      $(`tool-${other}`).classList.toggle("active", other === mode);
    }
  });
}

$("create").addEventListener("click", () => void createSession().catch(
  (err) => setStatus(String(err))));

$("apply-tf").addEventListener("click", async () => {
  if (!state.sessionId) {
    return;
  }
  await client.setIso(state.sessionId, Number(($("iso") as HTMLInputElement).value),
                      currentTf());
  state.clearSeeds();
  updateSegmentButton();
  await refreshStructures();
});

$("clear-peel").addEventListener("click", () => {
  if (state.sessionId) {
    void client.clearPeelWindows(state.sessionId);
  }
});

$("clear-seeds").addEventListener("click", async () => {
  if (state.sessionId) {
    await client.clearSeeds(state.sessionId);
    state.clearSeeds();
    updateSegmentButton();
  }
});

$("segment").addEventListener("click", async () => {
  if (!state.sessionId || !state.canSegment) {
    return;
  }
  const result = await client.segment(state.sessionId);
  state.lastSegment = result;
  $("seg-result").textContent =
    `nodes ${result.node_count}, cut ${result.cut_weight.toFixed(4)}, ` +
    `${result.solve_ms.toFixed(1)} ms`;
  ($("bake") as HTMLButtonElement).disabled = false;
});

$("bake").addEventListener("click", async () => {
  if (!state.sessionId) {
    return;
  }
  const side = ($("bake-side") as HTMLSelectElement).value as SeedTarget;
  const id = Number(($("bake-id") as HTMLInputElement).value);
  const color = hexToRgb(($("bake-color") as HTMLInputElement).value);
  const iso = Number(($("iso") as HTMLInputElement).value);
  const tf = rampTf([Math.min(1, color[0] + 0.3), color[1], color[2]], color, iso);
  await client.bakeStructure(state.sessionId, side, id, iso, tf);
  await refreshStructures();
});

$("export").addEventListener("click", async () => {
  if (!state.sessionId) {
    return;
  }
  const path = prompt("server-side export base path", "/tmp/isoray-export/scene");
  if (path) {
    const scene = await client.exportScene(state.sessionId, path);
    setStatus(`exported ${scene}`);
  }
});

setStatus("pick a phantom and press Create");
