// Scripted end-to-end walkthrough (the dumbbell flow): spawns the service,
// drives seed -> segment -> bake -> export through the same client the
// browser uses, then checks the final pushed frame against the CLI compose
// output byte for byte. Exits 0 on success.

import { spawn, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import WebSocket from "ws";

import { rampTf, ServiceClient } from "../src/api.js";
import { DEFAULT_BRUSH_RADIUS, strokeSegmentPixels } from "../src/brush.js";
import { FrameStream, StreamFrame } from "../src/stream.js";

const PORT = 8200 + Math.floor(Math.random() * 500);
const BASE = `http://127.0.0.1:${PORT}`;

function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}

function run(cmd: string, args: string[]): void {
  const res = spawnSync(cmd, args, { stdio: "inherit" });
  if (res.status !== 0) {
    throw new Error(`${cmd} ${args.join(" ")} -> exit ${res.status}`);
  }
}

async function waitForService(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/openapi.json`);
      if (res.ok) {
        return;
      }
    } catch {
      /* not up yet */
    }
    await sleep(250);
  }
  throw new Error("service did not come up");
}

async function main(): Promise<void> {
  const work = mkdtempSync(join(tmpdir(), "isoray-walkthrough-"));
  const volumeBase = join(work, "dumbbell");
  console.log(`workdir: ${work}`);

  run("isoray", ["synth", "--kind", "dumbbell", "--dims", "96",
                 "--out", volumeBase]);

  const server = spawn("isoray", ["serve", "--port", String(PORT)],
                       { stdio: ["ignore", "inherit", "inherit"] });
  try {
    await waitForService();
    const client = new ServiceClient(BASE);
    const sid = await client.createSession({
      volume: volumeBase, image_dims: [128, 128],
    });
    console.log(`session ${sid}`);

    // collect pushed frames; remember the newest
    let latest: StreamFrame | null = null;
    const stream = new FrameStream(client.streamUrl(sid), {
      wsFactory: (url) => new WebSocket(url) as any,
      onFrame: (f) => { latest = f; },
    });
    stream.connect();

    await client.setCamera(sid, {
      eye: [0.5, 0.5, -1.6], look_at: [0.5, 0.5, 0.5], up: [0, 1, 0],
      vfov: 40, image_dims: [128, 128],
    });
    await client.setIso(sid, 0.5, rampTf([0.95, 0.9, 0.8], [0.5, 0.12, 0.1], 0.5));

    // brush strokes over the two lobes (screen-left lobe is the high-x one),
    // swept with the default 3 px brush disc like the canvas tool
    const fgStroke = strokeSegmentPixels(14, 64, 50, 64, DEFAULT_BRUSH_RADIUS,
                                         128, 128);
    const bgStroke = strokeSegmentPixels(78, 64, 114, 64, DEFAULT_BRUSH_RADIUS,
                                         128, 128);
    const fgAdded = await client.pick(sid, fgStroke, "fg");
    const bgAdded = await client.pick(sid, bgStroke, "bg");
    console.log(`seeds: fg ${fgAdded.length}, bg ${bgAdded.length}`);
    if (fgAdded.length === 0 || bgAdded.length === 0) {
      throw new Error("strokes missed the surface");
    }

    const seg = await client.segment(sid);
    console.log(`segment: ${seg.node_count} nodes, cut ${seg.cut_weight.toFixed(4)}, ` +
                `${seg.solve_ms.toFixed(1)} ms`);

    await client.bakeStructure(sid, "fg", 1, 0.5,
                               rampTf([1.0, 0.35, 0.25], [0.55, 0.05, 0.05], 0.5));
    await client.bakeStructure(sid, "bg", 2, 0.5,
                               rampTf([0.3, 0.4, 1.0], [0.05, 0.05, 0.55], 0.5));
    const structures = await client.structures(sid);
    console.log(`structures: ${structures.map((s) => `#${s.id}(${s.cells})`).join(", ")}`);

    // wait for the final pushed frame (the one rendered after the last bake)
    const { revision: finalRev } = await client.frame(sid);
    const deadline = Date.now() + 120_000;
    while ((latest === null || (latest as StreamFrame).revision < finalRev)
           && Date.now() < deadline) {
      await sleep(100);
    }
    const finalFrame = latest as StreamFrame | null;
    if (finalFrame === null || finalFrame.revision < finalRev) {
      throw new Error("no pushed frame for the final revision");
    }

    const scenePath = await client.exportScene(sid, join(work, "composed"));
    stream.close();

    const composed = join(work, "compose.png");
    run("isoray", ["compose", "--scene", scenePath, "--out", composed]);
    const cliBytes = readFileSync(composed);
    const pushed = Buffer.from(finalFrame.png);
    const equal = cliBytes.equals(pushed);
    console.log(`pushed frame rev ${finalFrame.revision}: ${pushed.length} bytes; ` +
                `cli compose: ${cliBytes.length} bytes`);
    console.log(`[SECONDARY ACCEPTANCE] ${equal ? "PASS" : "FAIL"} ` +
                `walkthrough frame matches CLI compose byte-for-byte`);
    if (!equal) {
      process.exitCode = 1;
    }
  } finally {
    server.kill("SIGINT");
  }
}

main().catch((err) => {
  console.error(err);
  process.exitCode = 1;
});
