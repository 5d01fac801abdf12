// Scene drawing. Pure view: everything drawn comes from the latest frame
// (plus optimistic markers); the client computes no kinematics. The
// minimal 2D context interface keeps this testable without a DOM.

import type { ViewState } from "./state.js";
import { displayedObstacles, displayedTarget } from "./state.js";
import { ViewKind, Viewport, viewScale, worldToScreen } from "./transform.js";

export interface Context2D {
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
  globalAlpha: number;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
}

const COLORS = {
  arm: "#1f77b4",
  armStale: "#9aa5ad",
  target: "#d62728",
  obstacle: "#2a6fdb",
  risk: "rgba(42, 111, 219, 0.18)",
  riskHot: "rgba(219, 68, 42, 0.28)",
  trail: "#7f7f7f",
  text: "#333333",
};

export function renderView(
  ctx: Context2D,
  view: ViewKind,
  vp: Viewport,
  state: ViewState,
): void {
  ctx.save();
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, vp.width, vp.height);
  ctx.strokeStyle = "#cccccc";
  ctx.lineWidth = 1;
  ctx.strokeRect(0.5, 0.5, vp.width - 1, vp.height - 1);
  ctx.fillStyle = COLORS.text;
  ctx.font = "12px sans-serif";
  ctx.fillText(view === "side" ? "side (x-z)" : "top (x-y)", 8, 16);

  const frame = state.frame;
  const stale = state.connection !== "open";
  if (!frame) {
    ctx.fillText("waiting for frames...", 8, 32);
    ctx.restore();
    return;
  }
  if (stale) {
    ctx.globalAlpha = 0.45;
  }

  const scale = viewScale(view, vp);

  // risk areas first so the arm draws over them
  for (const ob of displayedObstacles(state)) {
    const [cx, cy] = worldToScreen(view, vp, ob.center);
    ctx.beginPath();
    ctx.arc(cx, cy, ob.r * scale, 0, Math.PI * 2);
    ctx.fillStyle = ob.d <= ob.r ? COLORS.riskHot : COLORS.risk;
    ctx.fill();
    ctx.beginPath();
    ctx.arc(cx, cy, 4, 0, Math.PI * 2);
    ctx.fillStyle = COLORS.obstacle;
    ctx.fill();
  }

  // tip trail
  if (state.trail.length > 1) {
    ctx.beginPath();
    const [x0, y0] = worldToScreen(view, vp, state.trail[0]);
    ctx.moveTo(x0, y0);
    for (const p of state.trail.slice(1)) {
      const [x, y] = worldToScreen(view, vp, p);
      ctx.lineTo(x, y);
    }
    ctx.strokeStyle = COLORS.trail;
    ctx.lineWidth = 1;
    ctx.stroke();
  }

  // arm polyline through the sampled backbone, base at origin
  ctx.beginPath();
  const base = worldToScreen(view, vp, [0, 0, 0]);
  ctx.moveTo(base[0], base[1]);
  for (const module of frame.backbone) {
    for (const p of module) {
      const [x, y] = worldToScreen(view, vp, p);
      ctx.lineTo(x, y);
    }
  }
  ctx.strokeStyle = stale ? COLORS.armStale : COLORS.arm;
  ctx.lineWidth = 4;
  ctx.stroke();

  // module ends
  for (const p of frame.positions) {
    const [x, y] = worldToScreen(view, vp, p);
    ctx.beginPath();
    ctx.arc(x, y, 5, 0, Math.PI * 2);
    ctx.fillStyle = COLORS.arm;
    ctx.fill();
  }

  const target = displayedTarget(state);
  if (target) {
    drawCross(ctx, worldToScreen(view, vp, target), 8, COLORS.target);
  }

  ctx.restore();
}

function drawCross(ctx: Context2D, at: [number, number], size: number, color: string): void {
  ctx.beginPath();
  ctx.moveTo(at[0] - size, at[1]);
  ctx.lineTo(at[0] + size, at[1]);
  ctx.moveTo(at[0], at[1] - size);
  ctx.lineTo(at[0], at[1] + size);
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.stroke();
}

export function lossReadout(state: ViewState): string {
  const frame = state.frame;
  if (!frame) return "no data";
  const entries = Object.entries(frame.losses)
    .filter(([k]) => k !== "total")
    .map(([k, v]) => `${k} ${v.toFixed(4)}`);
  entries.push(`total ${frame.losses.total?.toFixed(4) ?? "?"}`);
  return entries.join("  |  ");
}

export function obstacleReadout(state: ViewState): string {
  const frame = state.frame;
  if (!frame || frame.obstacles.length === 0) return "no obstacles";
  return frame.obstacles
    .map((ob, i) => {
      const inside = ob.d <= ob.r ? " INSIDE RISK AREA" : "";
      return `obstacle ${i}: d ${ob.d.toFixed(3)} m / r ${ob.r.toFixed(3)} m${inside}`;
    })
    .join("   ");
}
