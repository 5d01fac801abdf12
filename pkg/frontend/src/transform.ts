// World <-> screen mapping for the two orthographic views. The side view
// projects x-z, the top view x-y; both share one isotropic scale so circles
// stay circles.

import type { Vec3 } from "./protocol.js";

export interface Viewport {
  width: number;
  height: number;
  margin: number;
}

export interface WorkspaceBox {
  x: [number, number];
  y: [number, number];
  z: [number, number];
}

export const WORKSPACE: WorkspaceBox = {
  x: [-0.7, 0.7],
  y: [-0.7, 0.7],
  z: [-0.05, 0.75],
};

export type ViewKind = "side" | "top";

/** Axes (world indices) a view projects: [horizontal, vertical]. */
export function viewAxes(view: ViewKind): [number, number] {
  return view === "side" ? [0, 2] : [0, 1];
}

export function viewScale(view: ViewKind, vp: Viewport): number {
  const [h, v] = viewAxes(view);
  const spans: [number, number][] = [WORKSPACE.x, WORKSPACE.y, WORKSPACE.z];
  const hSpan = spans[h][1] - spans[h][0];
  const vSpan = spans[v][1] - spans[v][0];
  return Math.min(
    (vp.width - 2 * vp.margin) / hSpan,
    (vp.height - 2 * vp.margin) / vSpan,
  );
}

export function worldToScreen(view: ViewKind, vp: Viewport, point: Vec3): [number, number] {
  const [h, v] = viewAxes(view);
  const spans: [number, number][] = [WORKSPACE.x, WORKSPACE.y, WORKSPACE.z];
  const scale = viewScale(view, vp);
  const sx = vp.margin + (point[h] - spans[h][0]) * scale;
  const sy = vp.height - vp.margin - (point[v] - spans[v][0]) * scale;
  return [sx, sy];
}

/**
 * Move a world point by a screen-space delta within one view's plane; the
 * out-of-plane coordinate is untouched. The result is clamped to the
 * workspace box, so drags released out of bounds stay legal.
 */
export function dragInView(
  view: ViewKind,
  vp: Viewport,
  start: Vec3,
  dxPixels: number,
  dyPixels: number,
): Vec3 {
  const [h, v] = viewAxes(view);
  const scale = viewScale(view, vp);
  const out: Vec3 = [start[0], start[1], start[2]];
  out[h] = start[h] + dxPixels / scale;
  out[v] = start[v] - dyPixels / scale;
  return clampToWorkspace(out);
}

export function clampToWorkspace(point: Vec3): Vec3 {
  const spans: [number, number][] = [WORKSPACE.x, WORKSPACE.y, WORKSPACE.z];
  return [0, 1, 2].map((i) =>
    Math.min(Math.max(point[i], spans[i][0]), spans[i][1]),
  ) as Vec3;
}

/** Squared screen distance from a pointer to a world point in a view. */
export function pickDistance(
  view: ViewKind,
  vp: Viewport,
  point: Vec3,
  px: number,
  py: number,
): number {
  const [sx, sy] = worldToScreen(view, vp, point);
  return (sx - px) ** 2 + (sy - py) ** 2;
}
