// View model: a single store every socket and pointer event funnels
// through. The client renders only what frames carry (no client-side
// physics); optimistic marker positions are reconciled against the next
// frame that reflects them.

import type { Frame, Hello, Vec3 } from "./protocol.js";

export type Connection = "connecting" | "open" | "closed";

export const TRAIL_CAP = 300;
const RECONCILE_EPS = 1e-6;

export interface PendingMarkers {
  target: Vec3 | null;
  obstacles: Map<number, Vec3>;
}

export interface ViewState {
  connection: Connection;
  hello: Hello | null;
  frame: Frame | null;
  trail: Vec3[];
  pending: PendingMarkers;
  lastError: string | null;
}

export function initialState(): ViewState {
  return {
    connection: "connecting",
    hello: null,
    frame: null,
    trail: [],
    pending: { target: null, obstacles: new Map() },
    lastError: null,
  };
}

export function onOpen(state: ViewState): void {
  state.connection = "open";
  state.lastError = null;
}

export function onClose(state: ViewState): void {
  state.connection = "closed";
  state.pending = { target: null, obstacles: new Map() };
}

export function onHello(state: ViewState, hello: Hello): void {
  state.hello = hello;
  state.trail = [];
}

function close(a: Vec3, b: Vec3): boolean {
  return (
    Math.abs(a[0] - b[0]) < RECONCILE_EPS &&
    Math.abs(a[1] - b[1]) < RECONCILE_EPS &&
    Math.abs(a[2] - b[2]) < RECONCILE_EPS
  );
}

export function onFrame(state: ViewState, frame: Frame): void {
  state.frame = frame;
  const tip = frame.positions[frame.positions.length - 1];
  state.trail.push([tip[0], tip[1], tip[2]]);
  if (state.trail.length > TRAIL_CAP) {
    state.trail.splice(0, state.trail.length - TRAIL_CAP);
  }
  // reconcile optimistic markers once the server-side task reflects them
  if (state.pending.target && frame.target && close(state.pending.target, frame.target)) {
    state.pending.target = null;
  }
  for (const [index, center] of [...state.pending.obstacles]) {
    const ob = frame.obstacles[index];
    if (ob && close(ob.center, center)) {
      state.pending.obstacles.delete(index);
    }
  }
}

export function onError(state: ViewState, reason: string): void {
  state.lastError = reason;
}

export function optimisticTarget(state: ViewState, position: Vec3): void {
  state.pending.target = position;
}

export function optimisticObstacle(state: ViewState, index: number, center: Vec3): void {
  state.pending.obstacles.set(index, center);
}

/** Marker the scene should draw for the target right now. */
export function displayedTarget(state: ViewState): Vec3 | null {
  return state.pending.target ?? state.frame?.target ?? null;
}

/** Obstacle centers the scene should draw, honoring optimistic moves. */
export function displayedObstacles(state: ViewState): { center: Vec3; r: number; d: number }[] {
  if (!state.frame) return [];
  return state.frame.obstacles.map((ob, i) => ({
    center: state.pending.obstacles.get(i) ?? ob.center,
    r: ob.r,
    d: ob.d,
  }));
}
