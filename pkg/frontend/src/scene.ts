/** Scene model fed by transform messages: latest pose per object plus a
 * staleness flag so the view can grey out objects that stopped updating. */

import { Envelope, Pose, TransformData } from "./protocol.js";

export const STALE_AFTER_MS = 1000;

export interface SceneObject {
  name: string;
  pose: Pose;
  lastSeenMs: number;
}

export class SceneModel {
  private objects = new Map<string, SceneObject>();

  update(env: Envelope, nowMs: number): void {
    if (env.type !== "transform") return;
    const data = env.data as unknown as TransformData;
    this.objects.set(data.child, {
      name: data.child,
      pose: data.pose,
      lastSeenMs: nowMs,
    });
  }

  remove(name: string): void {
    this.objects.delete(name);
  }

  get(name: string): SceneObject | undefined {
    return this.objects.get(name);
  }

  names(): string[] {
    return [...this.objects.keys()].sort();
  }

  isStale(name: string, nowMs: number): boolean {
    const obj = this.objects.get(name);
    return obj === undefined || nowMs - obj.lastSeenMs > STALE_AFTER_MS;
  }

  /** Render list: every object with its pose and staleness at `nowMs`. */
  view(nowMs: number): Array<SceneObject & { stale: boolean }> {
    return this.names().map((name) => {
      const obj = this.objects.get(name)!;
      return { ...obj, stale: this.isStale(name, nowMs) };
    });
  }
}
