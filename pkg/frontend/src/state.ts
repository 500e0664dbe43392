// View state is a pure function of the snapshot plus the server updates
// applied so far; out-of-order updates are dropped by sequence number.

import { CellCode, Prediction, ServerUpdate, Snapshot } from "./schema.js";

export interface ViewState {
  seq: number;
  connected: boolean;
  height: number;
  width: number;
  grid: CellCode[][];
  agent: [number, number];
  trail: Set<string>; // "row,col" of previously traversed cells
  clock: number;
  score: number;
  timeLimit: number;
  m: number;
  windowFill: number;
  predictions: Prediction[] | null;
  pYellow: number | null;
  done: boolean;
  lastError: string | null;
  logPath: string | null;
}

function findAgent(grid: CellCode[][]): [number, number] {
  for (let r = 0; r < grid.length; r++) {
    const c = grid[r].indexOf(0);
    if (c >= 0) return [r, c];
  }
  throw new Error("snapshot grid has no agent cell");
}

export function initView(snapshot: Snapshot): ViewState {
  return {
    seq: snapshot.seq,
    connected: true,
    height: snapshot.height,
    width: snapshot.width,
    grid: snapshot.grid.map((row) => row.slice()),
    agent: findAgent(snapshot.grid),
    trail: new Set<string>(),
    clock: snapshot.clock,
    score: snapshot.score,
    timeLimit: snapshot.time_limit,
    m: snapshot.m,
    windowFill: 0,
    predictions: null,
    pYellow: null,
    done: false,
    lastError: null,
    logPath: null,
  };
}

export function applyUpdate(view: ViewState, msg: ServerUpdate): ViewState {
  if (msg.seq <= view.seq) return view; // stale or duplicate: drop
  if (!msg.ok) {
    return { ...view, seq: msg.seq, lastError: msg.error ?? "rejected" };
  }
  const next: ViewState = { ...view, seq: msg.seq, lastError: null };
  if (msg.delta && msg.delta.length > 0) {
    next.grid = view.grid.map((row) => row.slice());
    let newAgent: [number, number] | null = null;
    for (const d of msg.delta) {
      next.grid[d.row][d.col] = d.code;
      if (d.code === 0) newAgent = [d.row, d.col];
    }
    if (newAgent !== null) {
      next.trail = new Set(view.trail);
      next.trail.add(`${view.agent[0]},${view.agent[1]}`);
      next.agent = newAgent;
    }
  }
  if (typeof msg.clock === "number") next.clock = msg.clock;
  if (typeof msg.score === "number") next.score = msg.score;
  if (typeof msg.window_fill === "number") next.windowFill = msg.window_fill;
  // The prediction panel mirrors the latest payload verbatim; the UI never
  // rescales or re-ranks probabilities.
  next.predictions = msg.predictions ?? null;
  next.pYellow = msg.p_yellow ?? null;
  if (typeof msg.done === "boolean") next.done = msg.done;
  if (typeof msg.log === "string") next.logPath = msg.log;
  return next;
}

export function predictionSum(predictions: Prediction[]): number {
  return predictions.reduce((acc, p) => acc + p.prob, 0);
}
