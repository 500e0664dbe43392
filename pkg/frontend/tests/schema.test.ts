// Contract with the shared wire-schema document: the UI's types, guards,
// and color legend must agree with src/sarpredict/wire_schema.json.

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { CELL_CODES, isServerUpdate, isSnapshot, moveMessage, triageMessage } from "../src/schema.js";
import { COLORS } from "../src/render.js";

const schema = JSON.parse(
  readFileSync(new URL("../../src/sarpredict/wire_schema.json", import.meta.url), "utf-8"),
);

describe("shared wire schema", () => {
  it("is version 1, matching the client", () => {
    expect(schema.version).toBe(1);
    expect(schema.definitions.clientMessage.properties.v.const).toBe(1);
  });

  it("cell codes agree between schema, client constants, and legend", () => {
    const schemaCodes: number[] = schema.definitions.cellDelta.properties.code.enum;
    expect([...schemaCodes].sort((a, b) => a - b)).toEqual([...CELL_CODES].sort((a, b) => a - b));
    for (const code of schemaCodes) {
      if (code === 0) continue; // the agent is drawn as a dot, not a tile color
      expect(COLORS[code], `color for cell code ${code}`).toBeTruthy();
    }
  });

  it("client action kinds and directions match the schema", () => {
    const action = schema.definitions.clientMessage.properties.action.properties;
    expect(action.kind.enum).toEqual(["move", "triage", "start", "end"]);
    expect(action.dir.enum).toEqual(["up", "down", "left", "right"]);
    const move = moveMessage("up");
    expect(action.kind.enum).toContain(move.action.kind);
    expect(triageMessage().action.kind).toBe("triage");
  });

  it("server update guard requires the schema's required fields", () => {
    const required: string[] = schema.definitions.serverUpdate.required;
    expect(required).toEqual(["v", "seq", "ok"]);
    expect(isServerUpdate({ v: 1, seq: 3, ok: true })).toBe(true);
    expect(isServerUpdate({ v: 2, seq: 3, ok: true })).toBe(false);
    expect(isServerUpdate({ v: 1, ok: true })).toBe(false);
  });

  it("snapshot guard covers the schema's required fields", () => {
    const required: string[] = schema.definitions.snapshot.required;
    for (const field of ["v", "seq", "session_id", "map_id", "grid", "victims", "m"]) {
      expect(required).toContain(field);
    }
    expect(isSnapshot({ v: 1, seq: 1, session_id: "x", map_id: "easy",
      grid: [[1]], victims: [], m: 6 })).toBe(true);
    expect(isSnapshot({ v: 1, seq: 1 })).toBe(false);
  });

  it("prediction slots stay inside the 16-slot goal head", () => {
    expect(schema.definitions.prediction.properties.slot.maximum).toBe(15);
  });
});
