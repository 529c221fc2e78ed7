/** Gateway JSON protocol: one JSON object per WebSocket text frame.
 *
 *   -> {op: "sub",   topic}
 *   -> {op: "unsub", topic}
 *   -> {op: "pub",   topic, type, stamp_ns, data}
 *   -> {op: "call",  service, request, id}
 *   <- {op: "msg",   topic, type, stamp_ns, data}
 *   <- {op: "result", id, ok, response | detail}
 *   <- {op: "error", detail}
 */

export interface Pose {
  translation: [number, number, number];
  rotation: { w: number; x: number; y: number; z: number };
}

export interface JointStateData {
  names: string[];
  positions: number[];
  velocities: number[];
  efforts: number[];
}

export interface TransformData {
  parent: string;
  child: string;
  pose: Pose;
}

export interface WrenchData {
  frame: string;
  force: [number, number, number];
  torque: [number, number, number];
}

export interface Float64ArrayData {
  data: number[];
}

export interface ClockData {
  sim_time_ns: number;
}

export type PayloadType =
  | "joint_state"
  | "transform"
  | "wrench"
  | "float64_array"
  | "image"
  | "camera_info"
  | "point_cloud"
  | "clock";

export interface Envelope {
  topic: string;
  type: PayloadType;
  stamp_ns: number;
  data: Record<string, unknown>;
}

export interface MsgFrame extends Envelope {
  op: "msg";
}

export interface ResultFrame {
  op: "result";
  id: number | null;
  ok: boolean;
  response?: Record<string, unknown>;
  detail?: string;
}

export interface ErrorFrame {
  op: "error";
  detail: string;
}

export type ServerFrame = MsgFrame | ResultFrame | ErrorFrame;

export function subFrame(topic: string): string {
  return JSON.stringify({ op: "sub", topic });
}

export function unsubFrame(topic: string): string {
  return JSON.stringify({ op: "unsub", topic });
}

export function pubFrame(env: Envelope): string {
  return JSON.stringify({ op: "pub", ...env });
}

export function callFrame(
  service: string,
  request: Record<string, unknown>,
  id: number,
): string {
  return JSON.stringify({ op: "call", service, request, id });
}

/** Parse a server frame; returns null for anything that is not one. */
export function parseServerFrame(raw: string): ServerFrame | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const op = (obj as { op?: unknown }).op;
  if (op === "msg" || op === "result" || op === "error") {
    return obj as ServerFrame;
  }
  return null;
}

export function axesEnvelope(topic: string, axes: number[], stampNs: number): Envelope {
  return {
    topic,
    type: "float64_array",
    stamp_ns: stampNs,
    data: { data: axes },
  };
}
