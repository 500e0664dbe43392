// Session transport: HTTP bootstrap plus the action socket. Exactly one
// action is in flight at a time; keys pressed while waiting are queued in
// order and sent as acknowledgements arrive.

import { ClientMessage, MapInfo, ModelInfo, ServerUpdate, Snapshot, isServerUpdate } from "./schema.js";

export async function fetchMaps(base = ""): Promise<MapInfo[]> {
  const resp = await fetch(`${base}/maps`);
  return (await resp.json()).maps;
}

export async function fetchModels(base = ""): Promise<ModelInfo[]> {
  const resp = await fetch(`${base}/models`);
  return (await resp.json()).models;
}

export async function openSession(mapId: string, modelId: string, base = ""):
    Promise<{ session_id: string; snapshot: Snapshot }> {
  const resp = await fetch(`${base}/session`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ v: 1, map_id: mapId, model_id: modelId }),
  });
  if (!resp.ok) {
    throw new Error(`session refused: ${(await resp.json()).detail ?? resp.status}`);
  }
  return resp.json();
}

export class ActionSocket {
  private ws: WebSocket;
  private queue: ClientMessage[] = [];
  private inFlight = false;

  constructor(
    sessionId: string,
    private onUpdate: (msg: ServerUpdate) => void,
    private onClose: () => void,
    base = "",
  ) {
    const origin = base || `${location.protocol}//${location.host}`;
    const url = origin.replace(/^http/, "ws") + `/ws/session/${sessionId}`;
    this.ws = new WebSocket(url);
    this.ws.onmessage = (ev) => {
      let msg: unknown;
      try {
        msg = JSON.parse(ev.data as string);
      } catch {
        return;
      }
      if (!isServerUpdate(msg)) return;
      this.inFlight = false;
      this.onUpdate(msg);
      this.pump();
    };
    this.ws.onclose = () => this.onClose();
    this.ws.onerror = () => this.onClose();
  }

  send(msg: ClientMessage): void {
    this.queue.push(msg);
    this.pump();
  }

  private pump(): void {
    if (this.inFlight || this.queue.length === 0 || this.ws.readyState !== WebSocket.OPEN) {
      return;
    }
    const msg = this.queue.shift()!;
    this.inFlight = true;
    this.ws.send(JSON.stringify(msg));
  }

  close(): void {
    this.ws.close();
  }
}
