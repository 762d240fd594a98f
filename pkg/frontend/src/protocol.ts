/**
 * Wire protocol types and parsing for the teleop WebSocket.
 *
 * Server messages: hello (handshake), frame (PNG + pose + recording flag),
 * error. Client messages: cmd (raw stick values in [-1, 1]) and record
 * toggles. Parsing is defensive: anything malformed returns null so the
 * caller can count and skip it.
 */

export interface HelloMsg {
  type: "hello";
  world: string;
  fps: number;
}

export interface FrameMsg {
  type: "frame";
  seq: number;
  t: number;
  png_b64: string;
  pose: [number, number, number];
  recording: boolean;
}

export interface ErrorMsg {
  type: "error";
  msg: string;
}

export type ServerMsg = HelloMsg | FrameMsg | ErrorMsg;

export interface Command {
  linear: number;
  angular: number;
}

export function parseServerMsg(text: string): ServerMsg | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "hello":
      if (typeof msg.world === "string" && typeof msg.fps === "number") {
        return { type: "hello", world: msg.world, fps: msg.fps };
      }
      return null;
    case "frame": {
      const pose = msg.pose;
      if (
        typeof msg.seq === "number" &&
        typeof msg.t === "number" &&
        typeof msg.png_b64 === "string" &&
        typeof msg.recording === "boolean" &&
        Array.isArray(pose) &&
        pose.length === 3 &&
        pose.every((v) => typeof v === "number" && Number.isFinite(v))
      ) {
        return {
          type: "frame",
          seq: msg.seq,
          t: msg.t,
          png_b64: msg.png_b64,
          pose: pose as [number, number, number],
          recording: msg.recording,
        };
      }
      return null;
    }
    case "error":
      if (typeof msg.msg === "string") return { type: "error", msg: msg.msg };
      return null;
    default:
      return null;
  }
}

export function clamp(v: number, lo: number, hi: number): number {
  return Math.min(Math.max(v, lo), hi);
}

/** Serialize a velocity command, clamping both components into [-1, 1]. */
export function encodeCommand(cmd: Command): string {
  return JSON.stringify({
    type: "cmd",
    linear: clamp(cmd.linear, -1, 1),
    angular: clamp(cmd.angular, -1, 1),
  });
}

export function encodeRecordToggle(on: boolean): string {
  return JSON.stringify({ type: "record", on });
}
