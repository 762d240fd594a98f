/**
 * Keyboard/gamepad state and the per-animation-frame command derivation.
 *
 * Keys ramp: holding up/down (or left/right) moves the linear (angular)
 * command toward +/-1 by 0.15 per frame, and it ramps back to 0 on release,
 * so a held key feels like a joystick push rather than a step. Opposing
 * keys cancel. Gamepad axes pass straight through with a 0.1 deadzone and
 * take priority over keys while deflected.
 */

import { clamp, type Command } from "./protocol.js";

export const RAMP_PER_FRAME = 0.15;
export const GAMEPAD_DEADZONE = 0.1;

export interface KeysHeld {
  up: boolean;
  down: boolean;
  left: boolean;
  right: boolean;
}

export interface GamepadAxes {
  /** forward deflection in [-1, 1], +1 = full ahead */
  linear: number;
  /** turn deflection in [-1, 1], +1 = counterclockwise */
  angular: number;
}

export class ControlState {
  keys: KeysHeld = { up: false, down: false, left: false, right: false };
  gamepad: GamepadAxes | null = null;
  recording = false;
  connected = false;
  private linear = 0;
  private angular = 0;

  /** Last derived command (what the gauges display). */
  get command(): Command {
    return { linear: this.linear, angular: this.angular };
  }

  keyEvent(key: string, pressed: boolean): boolean {
    const map: Record<string, keyof KeysHeld> = {
      ArrowUp: "up", ArrowDown: "down", ArrowLeft: "left", ArrowRight: "right",
      w: "up", s: "down", a: "left", d: "right",
      W: "up", S: "down", A: "left", D: "right",
    };
    const name = map[key];
    if (name === undefined) return false;
    this.keys[name] = pressed;
    return true;
  }

  /** Advance ramps by one animation frame and return the command to send. */
  step(): Command {
    const pad = this.gamepad;
    if (pad !== null && (Math.abs(pad.linear) >= GAMEPAD_DEADZONE ||
                         Math.abs(pad.angular) >= GAMEPAD_DEADZONE)) {
      this.linear = Math.abs(pad.linear) < GAMEPAD_DEADZONE ? 0 : clamp(pad.linear, -1, 1);
      this.angular = Math.abs(pad.angular) < GAMEPAD_DEADZONE ? 0 : clamp(pad.angular, -1, 1);
      return this.command;
    }
    const linTarget = (this.keys.up ? 1 : 0) + (this.keys.down ? -1 : 0);
    const angTarget = (this.keys.left ? 1 : 0) + (this.keys.right ? -1 : 0);
    this.linear = rampToward(this.linear, linTarget);
    this.angular = rampToward(this.angular, angTarget);
    return this.command;
  }

  reset(): void {
    this.linear = 0;
    this.angular = 0;
    this.keys = { up: false, down: false, left: false, right: false };
  }
}

function rampToward(value: number, target: number): number {
  if (value < target) return clamp(Math.min(value + RAMP_PER_FRAME, target), -1, 1);
  if (value > target) return clamp(Math.max(value - RAMP_PER_FRAME, target), -1, 1);
  return value;
}

/** Map raw Gamepad API axes to our convention (stick up/left positive). */
export function axesFromGamepad(axes: readonly number[]): GamepadAxes {
  const ax0 = axes[0] ?? 0;
  const ax1 = axes[1] ?? 0;
  return { linear: -ax1, angular: -ax0 };
}
