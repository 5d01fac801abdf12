// End-to-end acceptance: a scripted headless client drives the real Python
// service through the same modules the browser UI uses (client, state
// store, throttle). Requires trained model bundles; point SOFTARM_MODELS at
// a directory holding c2s.model and c2a.model (default: ../.cache).

import { spawn, ChildProcess } from "node:child_process";
import { existsSync } from "node:fs";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { ServiceClient, SocketLike } from "../src/client.js";
import type { Frame, ServerMessage, Vec3 } from "../src/protocol.js";
import { serializeCommand } from "../src/protocol.js";
import { Throttle } from "../src/throttle.js";

const ROOT = resolve(__dirname, "..", "..");
const MODELS = process.env.SOFTARM_MODELS ?? join(ROOT, ".cache");
const PORT = 18000 + Math.floor(Math.random() * 2000);

let server: ChildProcess | null = null;

async function waitForHealth(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`http://127.0.0.1:${PORT}/health`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("service did not come up");
}

interface Harness {
  client: ServiceClient;
  frames: Frame[];
  messages: ServerMessage[];
  throttle: Throttle;
  waitFrames(count: number, timeoutMs?: number): Promise<void>;
  waitFor(pred: (f: Frame) => boolean, timeoutMs?: number): Promise<Frame>;
  close(): void;
}

function connect(): Promise<Harness> {
  return new Promise((resolvePromise, reject) => {
    const frames: Frame[] = [];
    const messages: ServerMessage[] = [];
    const client = new ServiceClient(
      `ws://127.0.0.1:${PORT}/ws`,
      {
        onOpen: () => {},
        onMessage: (msg) => {
          messages.push(msg);
          if (msg.type === "frame") frames.push(msg);
          if (msg.type === "hello") resolvePromise(harness);
        },
        onClose: () => {},
        onParseError: (reason) => reject(new Error(`parse error: ${reason}`)),
      },
      (url) => new WebSocket(url) as unknown as SocketLike,
    );
    const throttle = new Throttle((payload) => client.sendRaw(payload), 100);
    const harness: Harness = {
      client,
      frames,
      messages,
      throttle,
      async waitFrames(count, timeoutMs = 60000) {
        const want = frames.length + count;
        const deadline = Date.now() + timeoutMs;
        while (frames.length < want) {
          if (Date.now() > deadline) throw new Error("timed out waiting for frames");
          await new Promise((r) => setTimeout(r, 20));
        }
      },
      async waitFor(pred, timeoutMs = 60000) {
        const deadline = Date.now() + timeoutMs;
        let cursor = frames.length;
        while (Date.now() < deadline) {
          while (cursor < frames.length) {
            if (pred(frames[cursor])) return frames[cursor];
            cursor++;
          }
          await new Promise((r) => setTimeout(r, 20));
        }
        throw new Error("timed out waiting for frame predicate");
      },
      close: () => client.close(),
    };
    client.connect();
  });
}

function tip(frame: Frame): Vec3 {
  return frame.positions[frame.positions.length - 1];
}

function dist(a: Vec3, b: Vec3): number {
  return Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

beforeAll(async () => {
  if (!existsSync(join(MODELS, "c2s.model")) || !existsSync(join(MODELS, "c2a.model"))) {
    throw new Error(
      `trained models not found in ${MODELS}; train them first ` +
        "(see ../README.md) or set SOFTARM_MODELS",
    );
  }
  server = spawn(
    "python3",
    [
      "-m", "softarm.cli", "serve",
      "--c2s", join(MODELS, "c2s.model"),
      "--c2a", join(MODELS, "c2a.model"),
      "--preset", "online-follow",
      "--port", String(PORT),
      // faster than the real 10 Hz to keep the suite short, but paced, so
      // the frame stream stays ahead of the client under load
      "--tick-hz", "20",
    ],
    { cwd: ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stderr?.on("data", (d) => process.stderr.write(`[serve] ${d}`));
  await waitForHealth();
}, 60000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("live service through the UI modules", () => {
  it(
    "drag round trip: target reflected within 2 ticks, L_p falls over 50 ticks",
    async () => {
      const h = await connect();
      try {
        // let the arm settle toward the preset target first
        await h.waitFrames(80);
        const before = h.frames[h.frames.length - 1];
        const current = before.target;
        expect(current).not.toBeNull();
        const moved: Vec3 = [current![0] + 0.1, current![1], current![2]];

        // the drag path: optimistic marker + throttled command, as in main.ts
        h.throttle.offer(serializeCommand({ type: "set_target", position: moved }));
        h.throttle.flush();

        const ack = await (async () => {
          const deadline = Date.now() + 20000;
          while (Date.now() < deadline) {
            const found = h.messages.find((m) => m.type === "ack" && m.command === "set_target");
            if (found && found.type === "ack") return found;
            await new Promise((r) => setTimeout(r, 10));
          }
          throw new Error("no ack");
        })();

        const reflecting = await h.waitFor(
          (f) => f.target !== null && dist(f.target, moved) < 1e-9,
        );
        expect(reflecting.tick - ack.tick).toBeLessThanOrEqual(2);

        // L_p decreases over the following 50 ticks
        const start = reflecting.tick;
        await h.waitFor((f) => f.tick >= start + 50);
        const window = h.frames.filter((f) => f.tick > start && f.tick <= start + 50);
        const early = window.slice(0, 5).map((f) => f.losses.position);
        const late = window.slice(-5).map((f) => f.losses.position);
        const mean = (xs: number[]) => xs.reduce((a, b) => a + b, 0) / xs.length;
        expect(mean(late)).toBeLessThan(mean(early));
      } finally {
        h.close();
      }
    },
    120000,
  );

  it(
    "obstacle chase: alternating motion/halt, halts begin when d first exceeds r",
    async () => {
      const h = await connect();
      try {
        // settle AT the target by pinning it to the current tip, so the
        // obstacle parked there covers both tip and target
        await h.waitFrames(30);
        let last = h.frames[h.frames.length - 1];
        h.client.send({ type: "set_target", position: tip(last) });
        await h.waitFrames(50);
        last = h.frames[h.frames.length - 1];
        const r = 0.1;
        h.client.send({ type: "add_obstacle", center: tip(last), r });

        // chase: every 14 frames, park the obstacle on the current tip
        for (let round = 0; round < 12; round++) {
          await h.waitFrames(14);
          last = h.frames[h.frames.length - 1];
          h.client.send({ type: "set_obstacle", index: 0, center: tip(last) });
        }
        await h.waitFrames(40);

        // analyze the chase window: motion = the control intent changing
        // (applied cable actions), which is immune to plant sensing noise
        const chase = h.frames.filter((f) => f.obstacles.length > 0);
        expect(chase.length).toBeGreaterThan(120);
        const deltas: number[] = [];
        for (let i = 1; i < chase.length; i++) {
          let worst = 0;
          for (let m = 0; m < chase[i].applied_actions.length; m++) {
            for (let k = 0; k < 3; k++) {
              worst = Math.max(
                worst,
                Math.abs(chase[i].applied_actions[m][k] - chase[i - 1].applied_actions[m][k]),
              );
            }
          }
          deltas.push(worst);
        }
        const moving = deltas.map((s) => s > 2e-3);
        const phases: { moving: boolean; start: number; length: number }[] = [];
        for (let i = 0; i < moving.length; i++) {
          const lastPhase = phases[phases.length - 1];
          if (!lastPhase || lastPhase.moving !== moving[i]) {
            phases.push({ moving: moving[i], start: i, length: 1 });
          } else {
            lastPhase.length++;
          }
        }
        // structural phases: escapes run for many ticks, halts persist until
        // the obstacle is re-parked; shorter blips are jitter
        const significant = phases.filter((p) => p.length >= (p.moving ? 3 : 5));
        const motionPhases = significant.filter((p) => p.moving);
        const haltPhases = significant.filter((p) => !p.moving);
        expect(motionPhases.length).toBeGreaterThanOrEqual(2);
        expect(haltPhases.length).toBeGreaterThanOrEqual(2);

        // halts that follow motion begin as d crosses above r
        const checked = significant.filter(
          (p, i) => !p.moving && i > 0 && significant[i - 1].moving,
        );
        expect(checked.length).toBeGreaterThanOrEqual(2);
        let verified = 0;
        for (const halt of checked) {
          const window = chase.slice(Math.max(halt.start - 2, 0), halt.start + 7);
          if (window.some((f) => f.obstacles[0].d > f.obstacles[0].r)) verified++;
        }
        expect(verified).toBeGreaterThanOrEqual(2);
        expect(verified / checked.length).toBeGreaterThanOrEqual(0.75);
      } finally {
        h.close();
      }
    },
    180000,
  );
});
