// Entry point: wire the socket, the store, the two canvases, pointer
// dragging, and the control panel together. All state flows through one
// store; socket events and pointer events are serialized by the event loop.

import { ServiceClient } from "./client.js";
import { Command, serializeCommand, Vec3 } from "./protocol.js";
import { renderView, lossReadout, obstacleReadout } from "./render.js";
import {
  displayedObstacles,
  displayedTarget,
  initialState,
  onClose,
  onError,
  onFrame,
  onHello,
  onOpen,
  optimisticObstacle,
  optimisticTarget,
} from "./state.js";
import { Throttle } from "./throttle.js";
import { dragInView, pickDistance, ViewKind, Viewport } from "./transform.js";

const state = initialState();

const url = `ws://${location.host}/ws`;
const client = new ServiceClient(url, {
  onOpen: () => onOpen(state),
  onMessage: (msg) => {
    if (msg.type === "hello") onHello(state, msg);
    else if (msg.type === "frame") onFrame(state, msg);
    else if (msg.type === "error") onError(state, msg.reason);
  },
  onClose: () => onClose(state),
  onParseError: (reason) => onError(state, reason),
});
client.connect();

const throttle = new Throttle((payload) => client.sendRaw(payload), 100);

interface ViewBinding {
  kind: ViewKind;
  canvas: HTMLCanvasElement;
  viewport: Viewport;
}

function bindView(id: string, kind: ViewKind): ViewBinding {
  const canvas = document.getElementById(id) as HTMLCanvasElement;
  return {
    kind,
    canvas,
    viewport: { width: canvas.width, height: canvas.height, margin: 24 },
  };
}

const views = [bindView("view-side", "side"), bindView("view-top", "top")];

// -- dragging ---------------------------------------------------------------

type DragSubject = { kind: "target" } | { kind: "obstacle"; index: number } | null;

let dragging: { subject: Exclude<DragSubject, null>; view: ViewBinding;
                startWorld: Vec3; startX: number; startY: number } | null = null;

function pick(view: ViewBinding, px: number, py: number): { subject: DragSubject; world: Vec3 } {
  const radius2 = 18 * 18;
  const target = displayedTarget(state);
  if (target && pickDistance(view.kind, view.viewport, target, px, py) < radius2) {
    return { subject: { kind: "target" }, world: target };
  }
  const obstacles = displayedObstacles(state);
  for (let i = 0; i < obstacles.length; i++) {
    if (pickDistance(view.kind, view.viewport, obstacles[i].center, px, py) < radius2) {
      return { subject: { kind: "obstacle", index: i }, world: obstacles[i].center };
    }
  }
  return { subject: null, world: [0, 0, 0] };
}

for (const view of views) {
  view.canvas.addEventListener("pointerdown", (ev) => {
    const rect = view.canvas.getBoundingClientRect();
    const px = ev.clientX - rect.left;
    const py = ev.clientY - rect.top;
    const hit = pick(view, px, py);
    if (hit.subject) {
      dragging = { subject: hit.subject, view, startWorld: hit.world, startX: px, startY: py };
      view.canvas.setPointerCapture(ev.pointerId);
    }
  });
  view.canvas.addEventListener("pointermove", (ev) => {
    if (!dragging || dragging.view !== view) return;
    const rect = view.canvas.getBoundingClientRect();
    const px = ev.clientX - rect.left;
    const py = ev.clientY - rect.top;
    const world = dragInView(
      view.kind,
      view.viewport,
      dragging.startWorld,
      px - dragging.startX,
      py - dragging.startY,
    );
    let command: Command;
    if (dragging.subject.kind === "target") {
      optimisticTarget(state, world);
      command = { type: "set_target", position: world };
    } else {
      optimisticObstacle(state, dragging.subject.index, world);
      command = { type: "set_obstacle", index: dragging.subject.index, center: world };
    }
    throttle.offer(serializeCommand(command));
  });
  const finish = () => {
    throttle.flush();
    dragging = null;
  };
  view.canvas.addEventListener("pointerup", finish);
  view.canvas.addEventListener("pointercancel", finish);
}

// -- control panel ----------------------------------------------------------

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

byId<HTMLButtonElement>("btn-pause").addEventListener("click", () => {
  client.send({ type: state.frame?.paused ? "resume" : "pause" });
});
byId<HTMLSelectElement>("sel-controller").addEventListener("change", (ev) => {
  const value = (ev.target as HTMLSelectElement).value as "nn" | "cc";
  client.send({ type: "set_controller", controller: value });
});
byId<HTMLSelectElement>("sel-preset").addEventListener("change", (ev) => {
  client.send({ type: "load_preset", name: (ev.target as HTMLSelectElement).value });
});
byId<HTMLInputElement>("rng-threshold").addEventListener("input", (ev) => {
  const r = Number((ev.target as HTMLInputElement).value);
  if (state.frame && state.frame.obstacles.length > 0) {
    client.send({ type: "set_threshold", index: 0, r });
  }
});
byId<HTMLButtonElement>("btn-reconnect").addEventListener("click", () => {
  client.close();
  client.connect();
});

// -- render loop --------------------------------------------------------------

function draw(): void {
  for (const view of views) {
    const ctx = view.canvas.getContext("2d");
    if (ctx) renderView(ctx, view.kind, view.viewport, state);
  }
  byId("losses").textContent = lossReadout(state);
  byId("obstacles").textContent = obstacleReadout(state);
  const status = byId("status");
  status.textContent =
    state.connection === "open"
      ? `connected | tick ${state.frame?.tick ?? "-"} | controller ${state.frame?.controller ?? "-"}` +
        (state.frame?.paused ? " | PAUSED" : "")
      : state.connection;
  status.className = state.connection;
  document.body.classList.toggle("stale", state.connection !== "open");
  byId("error").textContent = state.lastError ?? "";
  const pauseButton = byId<HTMLButtonElement>("btn-pause");
  pauseButton.textContent = state.frame?.paused ? "resume" : "pause";
  requestAnimationFrame(draw);
}
requestAnimationFrame(draw);
