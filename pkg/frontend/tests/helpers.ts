import { ChildProcess, spawn } from "node:child_process";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import WebSocket from "ws";

import { ConsoleClient, WsLike } from "../src/client.js";

const HERE = dirname(fileURLToPath(import.meta.url));

export interface Harness {
  port: number;
  proc: ChildProcess;
  stop(): Promise<void>;
}

/** Spawns the Python app server and waits for its PORT line. */
export function startHarness(): Promise<Harness> {
  const proc = spawn("python3", [join(HERE, "harness.py")], {
    stdio: ["pipe", "pipe", "inherit"],
  });
  return new Promise((resolve, reject) => {
    let buf = "";
    const timer = setTimeout(() => reject(new Error("harness start timeout")), 25000);
    proc.stdout!.on("data", (chunk: Buffer) => {
      buf += chunk.toString();
      const m = buf.match(/PORT (\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve({
          port: Number(m[1]),
          proc,
          stop: () =>
            new Promise<void>((done) => {
              proc.once("exit", () => done());
              proc.stdin!.end();
              setTimeout(() => proc.kill("SIGKILL"), 5000).unref();
            }),
        });
      }
    });
    proc.once("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`harness exited early (code ${code})`));
    });
  });
}

export function connect(port: number): ConsoleClient {
  return new ConsoleClient(`ws://127.0.0.1:${port}`, {
    wsFactory: (url) => new WebSocket(url) as unknown as WsLike,
  });
}

export function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}

/** Polls until the predicate holds or the deadline passes. */
export async function waitFor(
  predicate: () => boolean,
  timeoutMs = 5000,
  label = "condition",
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) return;
    await sleep(10);
  }
  throw new Error(`timed out waiting for ${label}`);
}
