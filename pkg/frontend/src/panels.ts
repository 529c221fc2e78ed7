/** Control panels: MPC buttons (exactly one service call per click) and the
 * object list with add/remove; server errors surface as toasts. */

import { ConsoleClient } from "./client.js";
import { SceneModel } from "./scene.js";

export class MpcPanel {
  calls = 0;
  lastIterations: number | null = null;

  constructor(private readonly client: ConsoleClient) {}

  private async invoke(service: string): Promise<boolean> {
    this.calls += 1;
    const res = await this.client.call(service, {});
    if (res.ok && res.response && typeof res.response.iterations === "number") {
      this.lastIterations = res.response.iterations;
    }
    return res.ok;
  }

  step(): Promise<boolean> {
    return this.invoke("rpbi/mpc/step");
  }

  start(): Promise<boolean> {
    return this.invoke("rpbi/mpc/start");
  }

  stop(): Promise<boolean> {
    return this.invoke("rpbi/mpc/stop");
  }
}

export interface ObjectSpecForm {
  name: string;
  kind: "dynamic" | "collision" | "visual";
  shape: Record<string, unknown>;
  mass?: number;
  translation?: [number, number, number];
}

export class ObjectPanel {
  toasts: string[] = [];

  constructor(
    private readonly client: ConsoleClient,
    private readonly scene: SceneModel,
  ) {}

  list(): string[] {
    return this.scene.names();
  }

  async add(form: ObjectSpecForm): Promise<boolean> {
    const spec: Record<string, unknown> = { name: form.name, shape: form.shape };
    if (form.mass !== undefined) spec.mass = form.mass;
    if (form.translation !== undefined) spec.pose = { translation: form.translation };
    const res = await this.client.call("rpbi/add_object", { kind: form.kind, spec });
    if (!res.ok) this.toasts.push(res.detail ?? "add_object failed");
    return res.ok;
  }

  async remove(name: string): Promise<boolean> {
    const res = await this.client.call("rpbi/remove_object", { name });
    if (!res.ok) {
      this.toasts.push(res.detail ?? "remove_object failed");
      return false;
    }
    this.scene.remove(name);
    return true;
  }
}
