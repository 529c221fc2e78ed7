/** Human-in-the-loop smoke: a held key moves the simulated end-effector in
 * the mapped direction within 200 ms, and the wrench trace spikes when the
 * tool presses into the box. */

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConsoleClient } from "../src/client.js";
import { DEFAULT_BINDINGS, InputLoop, KeyAxes } from "../src/input.js";
import { TransformData, WrenchData } from "../src/protocol.js";
import { WrenchBuffer } from "../src/wrench.js";
import { connect, Harness, sleep, startHarness, waitFor } from "./helpers.js";

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

describe("held key to end-effector motion", () => {
  it("PageDown presses the tool down within 200 ms and spikes the wrench", async () => {
    const poses: Array<{ y: number; z: number; atMs: number }> = [];
    client.subscribe("rpbi/arm/ee_link/pose", (env) => {
      const data = env.data as unknown as TransformData;
      poses.push({
        y: data.pose.translation[1],
        z: data.pose.translation[2],
        atMs: Date.now(),
      });
    });
    const wrench = new WrenchBuffer(30);
    client.subscribe("rpbi/arm/ft/joint6", (env) => wrench.push(env));

    const keys = new KeyAxes(DEFAULT_BINDINGS);
    const loop = new InputLoop((env) => client.publish(env), keys, {
      topic: "rpbi/arm/operator_axes",
      rateHz: 30,
    });
    loop.start();

    // heartbeat with no input: the arm must hold still
    await waitFor(() => poses.length >= 5 && wrench.length >= 10, 8000, "streams");
    await sleep(400);
    const y0 = poses[poses.length - 1]!.y;
    const z0 = poses[poses.length - 1]!.z;
    const fzBias = avgFz(wrench, 50);

    // arrow key: mapped direction is -y, visible within 200 ms of the press
    keys.keyDown("ArrowLeft");
    const arrowAt = Date.now();
    await waitFor(
      () => poses[poses.length - 1]!.y < y0 - 0.001,
      2000,
      "arrow-key motion",
    );
    keys.keyUp("ArrowLeft");
    const arrowMove = poses.find((p) => p.atMs >= arrowAt && p.y < y0 - 0.001)!;
    expect(arrowMove.atMs - arrowAt).toBeLessThan(200);

    // steer back over the pad before pressing down
    keys.keyDown("ArrowRight");
    await waitFor(() => poses[poses.length - 1]!.y >= y0 - 0.002, 3000, "recenter");
    keys.keyUp("ArrowRight");
    await sleep(200);

    // hold the "down" key; the mapped direction is -z
    keys.keyDown("PageDown");
    const pressedAt = Date.now();
    await waitFor(
      () => poses.length > 0 && poses[poses.length - 1]!.z < z0 - 0.001,
      2000,
      "downward motion",
    );
    const firstMove = poses.find((p) => p.atMs >= pressedAt && p.z < z0 - 0.001)!;
    expect(firstMove.atMs - pressedAt).toBeLessThan(200);

    // keep pressing into the pad until the contact force spike shows up
    await waitFor(() => peakFz(wrench, fzBias) > 5.0, 6000, "wrench spike");
    keys.keyUp("PageDown");
    loop.stop();
    expect(peakFz(wrench, fzBias)).toBeGreaterThan(5.0);

    // release: zero heartbeat stops the motion
    const loop2 = new InputLoop((env) => client.publish(env), keys, {
      topic: "rpbi/arm/operator_axes",
      rateHz: 30,
    });
    loop2.start();
    await sleep(400);
    const zHeld = poses[poses.length - 1]!.z;
    await sleep(400);
    const zLater = poses[poses.length - 1]!.z;
    loop2.stop();
    expect(Math.abs(zLater - zHeld)).toBeLessThan(1e-3);

    client.unsubscribe("rpbi/arm/ee_link/pose");
    client.unsubscribe("rpbi/arm/ft/joint6");
  });
});

function avgFz(buf: WrenchBuffer, lastN: number): number {
  const fz = buf.series(2).slice(-lastN);
  return fz.reduce((acc, [, v]) => acc + v, 0) / Math.max(fz.length, 1);
}

function peakFz(buf: WrenchBuffer, bias: number): number {
  return Math.max(...buf.series(2).map(([, v]) => Math.abs(v - bias)), 0);
}
