// Single-page bootstrap: pick a map/model pair, open a session, render the
// mission, and translate keys into actions (arrows move, space triages).

import { Direction, ServerUpdate, WIRE_VERSION, moveMessage, triageMessage } from "./schema.js";
import { ViewState, applyUpdate, initView } from "./state.js";
import { PanelElements, render, renderPanel, tileSize } from "./render.js";
import { ActionSocket, fetchMaps, fetchModels, openSession } from "./net.js";

const KEY_DIRS: Record<string, Direction> = {
  ArrowUp: "up",
  ArrowDown: "down",
  ArrowLeft: "left",
  ArrowRight: "right",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot() {
  const canvas = el<HTMLCanvasElement>("board");
  const ctx = canvas.getContext("2d")!;
  const panel: PanelElements = {
    status: el("status"),
    clock: el("clock"),
    score: el("score"),
    windowFill: el("window-fill"),
    goals: el("goals"),
    pYellow: el("p-yellow"),
    pYellowBar: el("p-yellow-bar"),
    error: el("error"),
  };
  const mapSelect = el<HTMLSelectElement>("map-select");
  const modelSelect = el<HTMLSelectElement>("model-select");
  const startButton = el<HTMLButtonElement>("start");

  const [maps, models] = await Promise.all([fetchMaps(), fetchModels()]);
  for (const m of maps) {
    const opt = document.createElement("option");
    opt.value = m.id;
    opt.textContent = `${m.id} (${m.victims} victims, ${m.areas} areas)`;
    mapSelect.appendChild(opt);
  }
  for (const m of models) {
    const opt = document.createElement("option");
    opt.value = m.id;
    opt.textContent = `${m.id} (${m.variant}, m=${m.m})`;
    modelSelect.appendChild(opt);
  }
  if (models.length === 0) {
    panel.status.textContent = "no models served — train one and restart with --models-dir";
    startButton.disabled = true;
    return;
  }
  // Preselect the model whose map matches the selected map, if any.
  const pickModel = () => {
    const match = models.find((m) => m.map_id === mapSelect.value);
    if (match) modelSelect.value = match.id;
  };
  mapSelect.addEventListener("change", pickModel);
  pickModel();

  let view: ViewState | null = null;
  let socket: ActionSocket | null = null;

  const redraw = () => {
    if (!view) return;
    render(ctx, view, tileSize(view, 900, 640));
    renderPanel(panel, view);
  };

  startButton.addEventListener("click", async () => {
    socket?.close();
    try {
      const opened = await openSession(mapSelect.value, modelSelect.value);
      view = initView(opened.snapshot);
      socket = new ActionSocket(
        opened.session_id,
        (msg: ServerUpdate) => {
          if (view) {
            view = applyUpdate(view, msg);
            redraw();
          }
        },
        () => {
          if (view) {
            view = { ...view, connected: false };
            redraw();
          }
        },
      );
      redraw();
      canvas.focus();
    } catch (err) {
      panel.error.textContent = String(err);
    }
  });

  window.addEventListener("keydown", (ev) => {
    if (!socket || !view) return;
    if (ev.key in KEY_DIRS) {
      ev.preventDefault();
      socket.send(moveMessage(KEY_DIRS[ev.key]));
    } else if (ev.key === " ") {
      ev.preventDefault();
      socket.send(triageMessage());
    } else if (ev.key === "e") {
      socket.send({ v: WIRE_VERSION, action: { kind: "end" } });
    }
  });
}

boot().catch((err) => {
  const status = document.getElementById("status");
  if (status) status.textContent = `failed to start: ${err}`;
});
