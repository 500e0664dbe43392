// Wire types for the live-session protocol, mirroring wire_schema.json.
// The UI performs no inference: everything shown comes from these payloads.

export const WIRE_VERSION = 1 as const;

export type Direction = "up" | "down" | "left" | "right";

export type CellCode = 0 | 1 | 4 | 81 | 82 | 83 | 255;
export const CELL_CODES: readonly CellCode[] = [0, 1, 4, 81, 82, 83, 255];

export interface ClientAction {
  kind: "move" | "triage" | "start" | "end";
  dir?: Direction;
  map_id?: string;
}

export interface ClientMessage {
  v: typeof WIRE_VERSION;
  action: ClientAction;
}

export interface Prediction {
  slot: number;
  kind: "portal" | "victim";
  ref_id: number;
  cell: [number, number];
  prob: number;
}

export interface CellDelta {
  row: number;
  col: number;
  code: CellCode;
}

export interface ServerUpdate {
  v: number;
  seq: number;
  ok: boolean;
  error?: string;
  clock?: number;
  score?: number;
  delta?: CellDelta[];
  events?: { kind: string; t: number; payload: Record<string, unknown> }[];
  window_fill?: number;
  predictions?: Prediction[] | null;
  p_yellow?: number | null;
  done?: boolean;
  log?: string;
}

export interface VictimInfo {
  id: number;
  row: number;
  col: number;
  color: "yellow" | "green";
  status: "waiting" | "triaged" | "expired";
}

export interface Snapshot {
  v: number;
  seq: number;
  session_id: string;
  map_id: string;
  model_id: string;
  height: number;
  width: number;
  grid: CellCode[][];
  clock: number;
  score: number;
  spawn: [number, number];
  m: number;
  time_limit: number;
  expiry_time: number;
  victims: VictimInfo[];
}

export interface MapInfo {
  id: string;
  height: number;
  width: number;
  areas: number;
  victims: number;
  yellow: number;
  green: number;
}

export interface ModelInfo {
  id: string;
  variant: string;
  m: number;
  map_id: string;
  n_areas: number;
}

export function isServerUpdate(msg: unknown): msg is ServerUpdate {
  if (typeof msg !== "object" || msg === null) return false;
  const m = msg as Record<string, unknown>;
  return m.v === WIRE_VERSION && typeof m.seq === "number" && typeof m.ok === "boolean";
}

export function isSnapshot(msg: unknown): msg is Snapshot {
  if (typeof msg !== "object" || msg === null) return false;
  const m = msg as Record<string, unknown>;
  return (
    m.v === WIRE_VERSION &&
    typeof m.seq === "number" &&
    typeof m.session_id === "string" &&
    Array.isArray(m.grid) &&
    Array.isArray(m.victims) &&
    typeof m.m === "number"
  );
}

export function moveMessage(dir: Direction): ClientMessage {
  return { v: WIRE_VERSION, action: { kind: "move", dir } };
}

export function triageMessage(): ClientMessage {
  return { v: WIRE_VERSION, action: { kind: "triage" } };
}
