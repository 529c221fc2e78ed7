import { describe, expect, it } from "vitest";

import { Envelope } from "../src/protocol.js";
import { WrenchBuffer } from "../src/wrench.js";

function wrench(tSec: number, fz: number): Envelope {
  return {
    topic: "rpbi/arm/ft/joint6",
    type: "wrench",
    stamp_ns: Math.round(tSec * 1e9),
    data: { frame: "joint6", force: [0, 0, fz], torque: [0, 0, 0] },
  };
}

describe("WrenchBuffer", () => {
  it("keeps only the last window of samples", () => {
    const buf = new WrenchBuffer(10);
    for (let t = 0; t <= 15; t += 1) buf.push(wrench(t, t));
    const fz = buf.series(2);
    expect(fz[0]![0]).toBeGreaterThanOrEqual(5);
    expect(fz[fz.length - 1]![0]).toBe(15);
  });

  it("ignores non-wrench payloads", () => {
    const buf = new WrenchBuffer();
    buf.push({ topic: "t", type: "clock", stamp_ns: 0, data: { sim_time_ns: 0 } });
    expect(buf.length).toBe(0);
  });

  it("autoscales bounds around the data, never degenerate", () => {
    const buf = new WrenchBuffer();
    const [lo0, hi0] = buf.bounds();
    expect(hi0).toBeGreaterThan(lo0); // flat zero stream still has a span
    buf.push(wrench(0, -20));
    buf.push(wrench(1, 20));
    const [lo, hi] = buf.bounds();
    expect(lo).toBeLessThan(-20);
    expect(hi).toBeGreaterThan(20);
  });

  it("reset starts a fresh trace", () => {
    const buf = new WrenchBuffer();
    buf.push(wrench(0, 1));
    buf.reset();
    expect(buf.length).toBe(0);
  });
});
