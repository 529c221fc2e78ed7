/** Browser entry: wires the gateway client to the scene canvas, wrench plot,
 * keyboard teleop, MPC buttons, safety banner, and object panel. */

import { ConsoleClient, WsLike } from "./client.js";
import { DEFAULT_BINDINGS, InputLoop, KeyAxes } from "./input.js";
import { MpcPanel, ObjectPanel } from "./panels.js";
import { Float64ArrayData, WrenchData } from "./protocol.js";
import { SceneModel } from "./scene.js";
import { WrenchBuffer } from "./wrench.js";

const params = new URLSearchParams(window.location.search);
const robot = params.get("robot") ?? "arm";
const url = params.get("gateway") ?? `ws://${window.location.hostname}:9871`;

const client = new ConsoleClient(url, {
  wsFactory: (u) => new WebSocket(u) as unknown as WsLike,
});

const scene = new SceneModel();
const wrench = new WrenchBuffer();
const keys = new KeyAxes(DEFAULT_BINDINGS);
const mpc = new MpcPanel(client);
const objects = new ObjectPanel(client, scene);

const banner = document.getElementById("banner")!;
client.onStatus((s) => {
  banner.textContent = s === "connected" ? "" : `gateway: ${s}`;
  banner.className = s === "connected" ? "ok" : "warn";
});

const safety = document.getElementById("safety")!;
client.subscribe(`rpbi/${robot}/safety_report`, (env) => {
  const data = env.data as unknown as Float64ArrayData;
  const passed = data.data[0] === 1;
  safety.textContent = passed ? "" : `safety guard: ${data.data[1]} violation(s), holding`;
  safety.className = passed ? "ok" : "alert";
});

// every pose topic ends in /pose; subscribe per object as they appear in
// robot_info / the scene profile is not needed: the app publishes all poses
for (const name of ["ground", "pad", "crate", "box_push"]) {
  client.subscribe(`rpbi/${name}/pose`, (env) => scene.update(env, Date.now()));
}
client.subscribe(`rpbi/${robot}/ee_link/pose`, (env) => scene.update(env, Date.now()));
client.subscribe(`rpbi/${robot}/ft/joint6`, (env) => wrench.push(env));

const input = new InputLoop((env) => client.publish(env), keys, {
  topic: `rpbi/${robot}/operator_axes`,
  rateHz: 30,
});
window.addEventListener("keydown", (ev) => keys.keyDown(ev.key));
window.addEventListener("keyup", (ev) => keys.keyUp(ev.key));
window.addEventListener("blur", () => keys.releaseAll());
input.start();

document.getElementById("mpc-step")!.addEventListener("click", () => void mpc.step());
document.getElementById("mpc-start")!.addEventListener("click", () => void mpc.start());
document.getElementById("mpc-stop")!.addEventListener("click", () => void mpc.stop());

// --- painting -------------------------------------------------------------

const sceneCanvas = document.getElementById("scene") as HTMLCanvasElement;
const plotCanvas = document.getElementById("plot") as HTMLCanvasElement;
const SCALE = 200; // px per metre, top-down view centred on the origin

function paintScene(): void {
  const ctx = sceneCanvas.getContext("2d")!;
  const { width, height } = sceneCanvas;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.moveTo(width / 2, 0);
  ctx.lineTo(width / 2, height);
  ctx.moveTo(0, height / 2);
  ctx.lineTo(width, height / 2);
  ctx.stroke();
  const now = Date.now();
  for (const obj of scene.view(now)) {
    const [x, y] = obj.pose.translation;
    const px = width / 2 + x * SCALE;
    const py = height / 2 - y * SCALE;
    ctx.fillStyle = obj.stale ? "#bbb" : "#2a6";
    ctx.beginPath();
    ctx.arc(px, py, 6, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#333";
    ctx.fillText(obj.name, px + 8, py + 3);
  }
}

function paintPlot(): void {
  const ctx = plotCanvas.getContext("2d")!;
  const { width, height } = plotCanvas;
  ctx.clearRect(0, 0, width, height);
  const [lo, hi] = wrench.bounds();
  const colors = ["#d33", "#3a3", "#36c"];
  for (const comp of [0, 1, 2] as const) {
    const pts = wrench.series(comp);
    if (pts.length < 2) continue;
    const t0 = pts[0]![0];
    const t1 = pts[pts.length - 1]![0];
    const span = Math.max(t1 - t0, 1e-9);
    ctx.strokeStyle = colors[comp]!;
    ctx.beginPath();
    pts.forEach(([t, v], i) => {
      const px = ((t - t0) / span) * width;
      const py = height - ((v - lo) / (hi - lo)) * height;
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
}

function frame(): void {
  paintScene();
  paintPlot();
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);

// object panel wiring
const addForm = document.getElementById("add-form") as HTMLFormElement;
addForm.addEventListener("submit", (ev) => {
  ev.preventDefault();
  const data = new FormData(addForm);
  void objects.add({
    name: String(data.get("name")),
    kind: "dynamic",
    shape: { kind: "sphere", radius: Number(data.get("radius") ?? 0.05) },
    mass: 1.0,
    translation: [0.5, 0.5, 0.5],
  });
});

export { client, scene, wrench, keys, mpc, objects };
