// Message types for the interaction service (protocol version 1) and
// hand-rolled validation: every inbound message goes through parseMessage
// before it can touch the view model.

export const PROTOCOL_VERSION = 1;

export type Vec3 = [number, number, number];

export interface Hello {
  type: "hello";
  version: number;
  tick_hz: number;
  geometry: {
    module_length: number;
    cable_radius: number;
    module_count: number;
    max_cable_displacement: number;
  };
  preset: string;
  controller: string;
}

export interface ObstacleInfo {
  center: Vec3;
  r: number;
  d: number;
}

export interface Frame {
  type: "frame";
  version: number;
  tick: number;
  positions: Vec3[];
  orientations: Vec3[];
  backbone: Vec3[][];
  truth_display_only: boolean;
  encoder_configs: Vec3[];
  planned_configs: Vec3[];
  applied_actions: Vec3[];
  target: Vec3 | null;
  obstacles: ObstacleInfo[];
  losses: Record<string, number>;
  controller: string;
  paused: boolean;
  degraded: boolean;
}

export interface Ack {
  type: "ack";
  command: string;
  tick: number;
}

export interface ErrorMessage {
  type: "error";
  command: string | null;
  reason: string;
  tick?: number;
}

export type ServerMessage = Hello | Frame | Ack | ErrorMessage;

export type Command =
  | { type: "set_target"; position: Vec3 }
  | { type: "move_target"; delta: Vec3 }
  | { type: "set_obstacle"; index: number; center: Vec3 }
  | { type: "move_obstacle"; index: number; delta: Vec3 }
  | { type: "set_threshold"; index: number; r: number }
  | { type: "add_obstacle"; center: Vec3; r: number }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "set_controller"; controller: "nn" | "cc" }
  | { type: "load_preset"; name: string };

function isVec3(value: unknown): value is Vec3 {
  return (
    Array.isArray(value) &&
    value.length === 3 &&
    value.every((v) => typeof v === "number" && Number.isFinite(v))
  );
}

function isVec3List(value: unknown, count?: number): value is Vec3[] {
  if (!Array.isArray(value)) return false;
  if (count !== undefined && value.length !== count) return false;
  return value.every(isVec3);
}

export function parseMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new Error("not JSON");
  }
  if (typeof data !== "object" || data === null || !("type" in data)) {
    throw new Error("missing message type");
  }
  const msg = data as Record<string, unknown>;
  switch (msg.type) {
    case "hello": {
      if (msg.version !== PROTOCOL_VERSION) {
        throw new Error(`unsupported protocol version ${msg.version}`);
      }
      if (typeof msg.tick_hz !== "number" || typeof msg.geometry !== "object") {
        throw new Error("malformed hello");
      }
      return msg as unknown as Hello;
    }
    case "frame": {
      if (msg.version !== PROTOCOL_VERSION) {
        throw new Error(`unsupported protocol version ${msg.version}`);
      }
      if (typeof msg.tick !== "number") throw new Error("frame without tick");
      if (!isVec3List(msg.positions)) throw new Error("frame without positions");
      if (!isVec3List(msg.encoder_configs)) throw new Error("frame without encoder configs");
      if (msg.target !== null && !isVec3(msg.target)) throw new Error("bad target");
      if (!Array.isArray(msg.obstacles)) throw new Error("bad obstacles");
      for (const ob of msg.obstacles as unknown[]) {
        const o = ob as Record<string, unknown>;
        if (!isVec3(o.center) || typeof o.r !== "number" || typeof o.d !== "number") {
          throw new Error("bad obstacle entry");
        }
      }
      if (typeof msg.losses !== "object" || msg.losses === null) {
        throw new Error("frame without losses");
      }
      return msg as unknown as Frame;
    }
    case "ack": {
      if (typeof msg.command !== "string" || typeof msg.tick !== "number") {
        throw new Error("malformed ack");
      }
      return msg as unknown as Ack;
    }
    case "error": {
      if (typeof msg.reason !== "string") throw new Error("malformed error message");
      return msg as unknown as ErrorMessage;
    }
    default:
      throw new Error(`unknown message type '${String(msg.type)}'`);
  }
}

export function serializeCommand(command: Command): string {
  return JSON.stringify(command);
}
