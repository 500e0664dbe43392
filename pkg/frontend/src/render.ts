// Canvas tile renderer. Color legend: red agent dot, grey traversed dots,
// yellow/green victim squares, blue unavailable (triaged or expired),
// brown walls, grey obstacles, white floor. Candidate goals are outlined
// with their probability printed above.

import { ViewState } from "./state.js";

export const COLORS: Record<number, string> = {
  1: "#ffffff", // empty
  4: "#8d6e63", // wall
  81: "#f4c20d", // critical victim
  82: "#4caf50", // non-critical victim
  83: "#42a5f5", // unavailable (triaged or expired)
  255: "#9e9e9e", // obstacle
};

export const AGENT_COLOR = "#e53935";
export const TRAIL_COLOR = "#b0bec5";
export const OUTLINE_COLOR = "#7b1fa2";

export function tileSize(view: ViewState, maxWidth: number, maxHeight: number): number {
  return Math.max(4, Math.floor(Math.min(maxWidth / view.width, maxHeight / view.height)));
}

export function render(ctx: CanvasRenderingContext2D, view: ViewState, tile: number): void {
  ctx.canvas.width = view.width * tile;
  ctx.canvas.height = view.height * tile;
  for (let r = 0; r < view.height; r++) {
    for (let c = 0; c < view.width; c++) {
      const code = view.grid[r][c];
      ctx.fillStyle = code === 0 ? "#ffffff" : COLORS[code] ?? "#ff00ff";
      ctx.fillRect(c * tile, r * tile, tile, tile);
    }
  }
  // traversed-cell dots under the agent layer
  ctx.fillStyle = TRAIL_COLOR;
  for (const key of view.trail) {
    const [r, c] = key.split(",").map(Number);
    if (view.grid[r][c] === 1) {
      ctx.beginPath();
      ctx.arc(c * tile + tile / 2, r * tile + tile / 2, tile * 0.15, 0, Math.PI * 2);
      ctx.fill();
    }
  }
  // candidate-goal outlines with probability labels
  if (view.predictions) {
    ctx.lineWidth = Math.max(1, tile * 0.12);
    ctx.strokeStyle = OUTLINE_COLOR;
    ctx.fillStyle = OUTLINE_COLOR;
    ctx.font = `${Math.max(8, tile * 0.55)}px sans-serif`;
    ctx.textAlign = "center";
    for (const p of view.predictions) {
      const [r, c] = p.cell;
      ctx.strokeRect(c * tile + 1, r * tile + 1, tile - 2, tile - 2);
      ctx.fillText(p.prob.toFixed(2), c * tile + tile / 2, Math.max(9, r * tile - 2));
    }
  }
  // the agent, drawn last
  ctx.fillStyle = AGENT_COLOR;
  ctx.beginPath();
  ctx.arc(view.agent[1] * tile + tile / 2, view.agent[0] * tile + tile / 2,
    tile * 0.38, 0, Math.PI * 2);
  ctx.fill();
}

export interface PanelElements {
  status: HTMLElement;
  clock: HTMLElement;
  score: HTMLElement;
  windowFill: HTMLElement;
  goals: HTMLElement;
  pYellow: HTMLElement;
  pYellowBar: HTMLElement;
  error: HTMLElement;
}

export function renderPanel(els: PanelElements, view: ViewState): void {
  els.status.textContent = view.connected
    ? (view.done ? "mission complete" : "connected")
    : "disconnected";
  els.status.className = view.connected ? "status-ok" : "status-bad";
  els.clock.textContent = `${view.clock.toFixed(2)} s / ${view.timeLimit.toFixed(0)} s`;
  els.score.textContent = String(view.score);
  els.windowFill.textContent = `${view.windowFill}/${view.m}`;
  els.error.textContent = view.lastError ?? "";

  if (!view.predictions) {
    els.goals.innerHTML = "<em>filling move window…</em>";
  } else {
    const rows = [...view.predictions].sort((a, b) => b.prob - a.prob).map((p) => {
      const label = `${p.kind} ${p.ref_id} @ (${p.cell[0]},${p.cell[1]})`;
      const pct = (p.prob * 100).toFixed(1);
      return `<div class="goal-row"><span class="goal-label">${label}</span>` +
        `<span class="goal-bar"><span style="width:${pct}%"></span></span>` +
        `<span class="goal-prob">${p.prob.toFixed(4)}</span></div>`;
    });
    els.goals.innerHTML = rows.join("");
  }
  if (view.pYellow === null) {
    els.pYellow.textContent = "–";
    els.pYellowBar.style.width = "0%";
  } else {
    els.pYellow.textContent = view.pYellow.toFixed(4);
    els.pYellowBar.style.width = `${(view.pYellow * 100).toFixed(1)}%`;
  }
}
