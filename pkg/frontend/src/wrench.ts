/** Scrolling force-feedback buffer: keeps the last windowSec of wrench
 * samples and autoscaled bounds for the plot. */

import { Envelope, WrenchData } from "./protocol.js";

export interface WrenchSample {
  tSec: number;
  force: [number, number, number];
  torque: [number, number, number];
}

export class WrenchBuffer {
  private samples: WrenchSample[] = [];

  constructor(readonly windowSec = 10) {}

  push(env: Envelope): void {
    if (env.type !== "wrench") return;
    const data = env.data as unknown as WrenchData;
    const tSec = env.stamp_ns / 1e9;
    this.samples.push({ tSec, force: data.force, torque: data.torque });
    const cutoff = tSec - this.windowSec;
    while (this.samples.length > 0 && this.samples[0]!.tSec < cutoff) {
      this.samples.shift();
    }
  }

  /** Changing the plotted subscription starts a fresh trace. */
  reset(): void {
    this.samples = [];
  }

  get length(): number {
    return this.samples.length;
  }

  series(component: 0 | 1 | 2, which: "force" | "torque" = "force"): Array<[number, number]> {
    return this.samples.map((s) => [s.tSec, s[which][component]]);
  }

  /** Autoscaled y-bounds over every component, padded, never degenerate. */
  bounds(): [number, number] {
    let lo = 0;
    let hi = 0;
    for (const s of this.samples) {
      for (const v of [...s.force, ...s.torque]) {
        lo = Math.min(lo, v);
        hi = Math.max(hi, v);
      }
    }
    const pad = Math.max(0.1 * (hi - lo), 0.5);
    return [lo - pad, hi + pad];
  }
}
