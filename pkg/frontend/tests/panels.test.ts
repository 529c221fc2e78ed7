import { describe, expect, it } from "vitest";

import { ConsoleClient } from "../src/client.js";
import { MpcPanel, ObjectPanel } from "../src/panels.js";
import { ResultFrame } from "../src/protocol.js";
import { SceneModel } from "../src/scene.js";

/** Captures service calls and replies from a script. */
function fakeClient(script: (service: string) => ResultFrame) {
  const calls: Array<{ service: string; request: Record<string, unknown> }> = [];
  const client = {
    call: async (service: string, request: Record<string, unknown> = {}) => {
      calls.push({ service, request });
      return script(service);
    },
  } as unknown as ConsoleClient;
  return { client, calls };
}

const ok = (iterations: number): ResultFrame => ({
  op: "result",
  id: 1,
  ok: true,
  response: { iterations, mode: "stopped" },
});

describe("MpcPanel", () => {
  it("issues exactly one call per button press", async () => {
    let n = 0;
    const { client, calls } = fakeClient(() => ok(++n));
    const panel = new MpcPanel(client);
    await panel.step();
    expect(calls).toHaveLength(1);
    expect(calls[0]!.service).toBe("rpbi/mpc/step");
    await panel.step();
    expect(calls).toHaveLength(2);
    expect(panel.lastIterations).toBe(2);
  });

  it("start and stop hit their services once each", async () => {
    const { client, calls } = fakeClient(() => ok(0));
    const panel = new MpcPanel(client);
    await panel.start();
    await panel.stop();
    expect(calls.map((c) => c.service)).toEqual(["rpbi/mpc/start", "rpbi/mpc/stop"]);
  });
});

describe("ObjectPanel", () => {
  it("add sends kind and spec; server errors become toasts", async () => {
    const { client, calls } = fakeClient((svc) =>
      svc === "rpbi/add_object"
        ? { op: "result", id: 1, ok: false, detail: "object name 'pad' already in use" }
        : ok(0),
    );
    const panel = new ObjectPanel(client, new SceneModel());
    const accepted = await panel.add({
      name: "pad",
      kind: "dynamic",
      shape: { kind: "sphere", radius: 0.05 },
      mass: 1,
    });
    expect(accepted).toBe(false);
    expect(panel.toasts[0]).toContain("already in use");
    expect(calls[0]!.request).toMatchObject({
      kind: "dynamic",
      spec: { name: "pad", shape: { kind: "sphere", radius: 0.05 }, mass: 1 },
    });
  });

  it("remove drops the object from the scene model on success", async () => {
    const { client } = fakeClient(() => ({ op: "result", id: 1, ok: true, response: {} }));
    const scene = new SceneModel();
    scene.update(
      {
        topic: "rpbi/pad/pose",
        type: "transform",
        stamp_ns: 0,
        data: {
          parent: "rpbi/world",
          child: "pad",
          pose: { translation: [0, 0, 0], rotation: { w: 1, x: 0, y: 0, z: 0 } },
        },
      },
      0,
    );
    const panel = new ObjectPanel(client, scene);
    expect(panel.list()).toEqual(["pad"]);
    await panel.remove("pad");
    expect(panel.list()).toEqual([]);
  });
});
