// Orbit camera: drags move the eye on a sphere around the look-at point.
// Camera updates go to the service; nothing is rendered client-side.

import type { CameraState, Vec3 } from "./api.js";

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

const POLE_MARGIN = 0.05; // rad, keeps the view axis off the up vector

export class OrbitController {
  constructor(public camera: CameraState,
              public radiansPerPixel = 0.008) {}

  /** Rotate by a pixel drag, preserving the orbit radius; returns the
   *  updated camera (also stored on the controller). */
  rotate(dxPixels: number, dyPixels: number): CameraState {
    const offset = sub(this.camera.eye, this.camera.look_at);
    const r = norm(offset);
    let azimuth = Math.atan2(offset[0], offset[2]);
    let polar = Math.acos(Math.min(1, Math.max(-1, offset[1] / r)));
    azimuth -= dxPixels * this.radiansPerPixel;
    polar = Math.min(Math.PI - POLE_MARGIN,
                     Math.max(POLE_MARGIN, polar - dyPixels * this.radiansPerPixel));
    const eye: Vec3 = add(this.camera.look_at, [
      r * Math.sin(polar) * Math.sin(azimuth),
      r * Math.cos(polar),
      r * Math.sin(polar) * Math.cos(azimuth),
    ]);
    this.camera = { ...this.camera, eye, up: [0, 1, 0] };
    return this.camera;
  }

  /** Dolly by a factor (>1 zooms out), keeping the look-at point fixed. */
  zoom(factor: number): CameraState {
    const offset = sub(this.camera.eye, this.camera.look_at);
    this.camera = {
      ...this.camera,
      eye: add(this.camera.look_at,
               [offset[0] * factor, offset[1] * factor, offset[2] * factor]),
    };
    return this.camera;
  }
}

/** Trailing-edge throttle: at most one call per interval, the latest
 *  arguments win, nothing is dropped silently. */
export function makeThrottle<A extends unknown[]>(
  intervalMs: number,
  fn: (...args: A) => void,
  now: () => number = () => Date.now(),
  schedule: (cb: () => void, ms: number) => unknown = setTimeout,
): (...args: A) => void {
  let last = -Infinity;
  let queued: A | null = null;
  let timerArmed = false;
  const fire = () => {
    timerArmed = false;
    if (queued !== null) {
      const args = queued;
      queued = null;
      last = now();
      fn(...args);
    }
  };
  return (...args: A) => {
    const t = now();
    if (t - last >= intervalMs && !timerArmed) {
      last = t;
      fn(...args);
    } else {
      queued = args;
      if (!timerArmed) {
        timerArmed = true;
        schedule(fire, Math.max(0, intervalMs - (t - last)));
      }
    }
  };
}

/** Camera updates are rate-limited to 15 per second. */
export const CAMERA_THROTTLE_MS = Math.ceil(1000 / 15);
