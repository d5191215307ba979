// Orbit camera: spherical coordinates around a target point. Dragging rotates,
// the wheel dollies, and every change is reported as a set_camera message.

import { setCamera, Vec3 } from "./protocol.js";

export interface OrbitState {
  azimuth: number;   // radians around +y
  elevation: number; // radians above the horizon
  distance: number;
  target: Vec3;
}

const MAX_ELEVATION = Math.PI / 2 - 0.05;
const MIN_DISTANCE = 0.05;

export function defaultOrbit(distance = 3): OrbitState {
  return { azimuth: 0, elevation: 0.15, distance, target: [0, 0, 0] };
}

export function orbitEye(s: OrbitState): Vec3 {
  const c = Math.cos(s.elevation);
  return [
    s.target[0] + s.distance * c * Math.sin(s.azimuth),
    s.target[1] + s.distance * Math.sin(s.elevation),
    s.target[2] - s.distance * c * Math.cos(s.azimuth),
  ];
}

export function rotate(s: OrbitState, dAzimuth: number, dElevation: number): OrbitState {
  return {
    ...s,
    azimuth: s.azimuth + dAzimuth,
    elevation: Math.min(MAX_ELEVATION, Math.max(-MAX_ELEVATION, s.elevation + dElevation)),
  };
}

export function dolly(s: OrbitState, factor: number): OrbitState {
  return { ...s, distance: Math.max(MIN_DISTANCE, s.distance * factor) };
}

export function orbitCameraMessage(s: OrbitState) {
  return setCamera(orbitEye(s), s.target);
}

/** Rate limiter for set_camera spam; at most one event per interval. */
export class Throttle {
  private last = -Infinity;

  constructor(private intervalMs: number, private clock: () => number = () => Date.now()) {}

  ready(): boolean {
    const now = this.clock();
    if (now - this.last >= this.intervalMs) {
      this.last = now;
      return true;
    }
    return false;
  }
}
