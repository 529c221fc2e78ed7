/** Console protocol against the live Python gateway: clock/transform streams,
 * axes publishing with loopback latency, and one service call per button. */

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { MpcPanel } from "../src/panels.js";
import { ClockData, Envelope, TransformData } from "../src/protocol.js";
import { connect, Harness, sleep, startHarness, waitFor } from "./helpers.js";
import { ConsoleClient } from "../src/client.js";

let harness: Harness;
let client: ConsoleClient;

beforeAll(async () => {
  harness = await startHarness();
  client = connect(harness.port);
  await client.ready();
});

afterAll(async () => {
  client?.close();
  await harness?.stop();
});

describe("gateway streams", () => {
  it("delivers a monotonically advancing clock stream", async () => {
    const stamps: number[] = [];
    client.subscribe("rpbi/clock", (env) => {
      stamps.push((env.data as unknown as ClockData).sim_time_ns);
    });
    await waitFor(() => stamps.length >= 5, 5000, "clock messages");
    client.unsubscribe("rpbi/clock");
    for (let i = 1; i < 5; i++) expect(stamps[i]!).toBeGreaterThan(stamps[i - 1]!);
  });

  it("delivers transform streams for scene objects", async () => {
    const got: Envelope[] = [];
    client.subscribe("rpbi/pad/pose", (env) => got.push(env));
    await waitFor(() => got.length >= 2, 5000, "pad transforms");
    client.unsubscribe("rpbi/pad/pose");
    const data = got[0]!.data as unknown as TransformData;
    expect(got[0]!.type).toBe("transform");
    expect(data.child).toBe("pad");
    expect(data.pose.translation).toHaveLength(3);
  });
});

describe("axes loopback", () => {
  it("published axes come back through the gateway in under 50 ms", async () => {
    const topic = "rpbi/arm/operator_axes";
    const received: number[] = []; // arrival wall time per stamp
    const sentAt = new Map<number, number>();
    client.subscribe(topic, (env) => {
      const t0 = sentAt.get(env.stamp_ns);
      if (t0 !== undefined) received.push(Date.now() - t0);
    });
    await sleep(100); // let the subscription register server-side
    for (let i = 0; i < 10; i++) {
      const stamp = 1_000_000 + i;
      sentAt.set(stamp, Date.now());
      client.publish({
        topic,
        type: "float64_array",
        stamp_ns: stamp,
        data: { data: [0, 0, 0] }, // zero axes: heartbeat, no motion
      });
      await sleep(30);
    }
    client.unsubscribe(topic);
    await waitFor(() => received.length >= 8, 3000, "loopback echoes");
    const sorted = [...received].sort((a, b) => a - b);
    const median = sorted[Math.floor(sorted.length / 2)]!;
    expect(median).toBeLessThan(50);
    expect(Math.min(...received)).toBeLessThan(50);
  });
});

describe("mpc buttons", () => {
  it("each step click is exactly one service call advancing one iteration", async () => {
    const panel = new MpcPanel(client);
    expect(await panel.step()).toBe(true);
    const first = panel.lastIterations!;
    expect(await panel.step()).toBe(true);
    expect(panel.lastIterations).toBe(first + 1);
    expect(panel.calls).toBe(2);
  });

  it("step while running fails with the server detail", async () => {
    const panel = new MpcPanel(client);
    await panel.start();
    const res = await client.call("rpbi/mpc/step", {});
    expect(res.ok).toBe(false);
    expect(res.detail).toContain("already running");
    await panel.stop();
  });

  it("unknown services report failure without killing the connection", async () => {
    const res = await client.call("rpbi/ghost", {});
    expect(res.ok).toBe(false);
    const again = await client.call("rpbi/mpc/stop", {});
    expect(again.ok).toBe(true);
  });
});

describe("object services", () => {
  it("duplicate add is rejected with the server message", async () => {
    const res = await client.call("rpbi/add_object", {
      kind: "dynamic",
      spec: { name: "pad", mass: 1.0, shape: { kind: "sphere", radius: 0.05 } },
    });
    expect(res.ok).toBe(false);
    expect(res.detail).toContain("already in use");
  });

  it("add and remove round trip", async () => {
    const add = await client.call("rpbi/add_object", {
      kind: "dynamic",
      spec: {
        name: "console_ball",
        mass: 0.2,
        shape: { kind: "sphere", radius: 0.04 },
        pose: { translation: [1.0, 1.0, 0.5] },
      },
    });
    expect(add.ok).toBe(true);
    const got: Envelope[] = [];
    client.subscribe("rpbi/console_ball/pose", (env) => got.push(env));
    await waitFor(() => got.length > 0, 5000, "new object pose stream");
    client.unsubscribe("rpbi/console_ball/pose");
    const rm = await client.call("rpbi/remove_object", { name: "console_ball" });
    expect(rm.ok).toBe(true);
  });
});
