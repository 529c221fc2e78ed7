/** Keyboard/gamepad input: held keys become axes in [-1, 1], published as a
 * Float64ArrayMsg heartbeat at a fixed rate whether or not anything is held. */

import { axesEnvelope, Envelope } from "./protocol.js";

export interface KeyBinding {
  axis: number;
  value: number; // contribution while held, usually +1 or -1
}

/** Arrow keys steer x/y, PageUp/PageDown steer z. */
export const DEFAULT_BINDINGS: Record<string, KeyBinding> = {
  ArrowUp: { axis: 0, value: 1 },
  ArrowDown: { axis: 0, value: -1 },
  ArrowRight: { axis: 1, value: 1 },
  ArrowLeft: { axis: 1, value: -1 },
  PageUp: { axis: 2, value: 1 },
  PageDown: { axis: 2, value: -1 },
};

const clamp = (v: number) => Math.max(-1, Math.min(1, v));

export class KeyAxes {
  private held = new Set<string>();

  constructor(
    private readonly bindings: Record<string, KeyBinding> = DEFAULT_BINDINGS,
    readonly dims = 3,
  ) {}

  keyDown(code: string): void {
    if (code in this.bindings) this.held.add(code);
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  releaseAll(): void {
    this.held.clear();
  }

  /** Sum of held contributions per axis, each clamped to [-1, 1]. */
  axes(): number[] {
    const out = new Array<number>(this.dims).fill(0);
    for (const code of this.held) {
      const b = this.bindings[code]!;
      if (b.axis < this.dims) out[b.axis] = clamp(out[b.axis]! + b.value);
    }
    return out;
  }

  /** Gamepad axes override key axes when any stick is deflected. */
  merge(gamepadAxes: number[] | null): number[] {
    if (gamepadAxes !== null && gamepadAxes.some((v) => v !== 0)) {
      return gamepadAxes.slice(0, this.dims).map(clamp);
    }
    return this.axes();
  }
}

export interface InputLoopOptions {
  topic: string;
  rateHz?: number; // capped at 60
  now?: () => number; // ms clock, injectable for tests
}

export class InputLoop {
  readonly periodMs: number;
  private timer: ReturnType<typeof setInterval> | null = null;
  published = 0;

  constructor(
    private readonly publish: (env: Envelope) => void,
    private readonly source: KeyAxes,
    private readonly options: InputLoopOptions,
  ) {
    const rate = Math.min(options.rateHz ?? 30, 60);
    this.periodMs = 1000 / rate;
  }

  /** One heartbeat: publishes the current axes even when they are zero. */
  tick(): void {
    const now = this.options.now ?? Date.now;
    this.publish(axesEnvelope(this.options.topic, this.source.axes(), now() * 1e6));
    this.published += 1;
  }

  start(): void {
    if (this.timer === null) this.timer = setInterval(() => this.tick(), this.periodMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
