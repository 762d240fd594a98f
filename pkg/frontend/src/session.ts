/**
 * Connection-independent session bookkeeping: frame sequencing, dropped and
 * malformed counters, and the server-acknowledged recording flag.
 *
 * Kept free of DOM and WebSocket so the logic is unit-testable; the page
 * glue in main.ts feeds it raw message text and reads its counters.
 */

import { parseServerMsg, type FrameMsg, type HelloMsg } from "./protocol.js";

export type SessionStatus = "connecting" | "connected" | "busy" | "closed" | "error";

export interface SessionEvents {
  onHello?(msg: HelloMsg): void;
  onFrame?(msg: FrameMsg): void;
  onError?(message: string): void;
}

export class SessionTracker {
  status: SessionStatus = "connecting";
  world = "";
  fps = 0;
  framesSeen = 0;
  droppedFrames = 0;
  malformedMessages = 0;
  /** recording state as last acknowledged by the server */
  recordingAcked = false;
  lastPose: [number, number, number] = [0, 0, 0];
  private lastSeq: number | null = null;

  constructor(private events: SessionEvents = {}) {}

  /** Feed one raw server message; returns the parsed message or null. */
  handleMessage(text: string) {
    const msg = parseServerMsg(text);
    if (msg === null) {
      this.malformedMessages += 1;
      return null;
    }
    switch (msg.type) {
      case "hello":
        this.status = "connected";
        this.world = msg.world;
        this.fps = msg.fps;
        this.events.onHello?.(msg);
        break;
      case "frame":
        this.framesSeen += 1;
        if (this.lastSeq !== null && msg.seq > this.lastSeq + 1) {
          this.droppedFrames += msg.seq - this.lastSeq - 1;
        }
        this.lastSeq = msg.seq;
        this.recordingAcked = msg.recording;
        this.lastPose = msg.pose;
        this.events.onFrame?.(msg);
        break;
      case "error":
        if (/busy|session in use/i.test(msg.msg)) {
          this.status = "busy";
        }
        this.events.onError?.(msg.msg);
        break;
    }
    return msg;
  }

  markClosed(): void {
    if (this.status !== "busy") {
      this.status = "closed";
    }
  }

  markFailed(): void {
    this.status = "error";
  }
}
