// fetch-based transport and the stream message router. The WebSocket is
// wrapped behind SocketLike so the node test harness can drive the same
// router with the `ws` package.

import { ClientState } from "./state.js";
import type {
  FrameMessage,
  GroupsResponse,
  InteractionBody,
  PolicyResponse,
  PostResult,
  Transport,
} from "./types.js";

export class HttpTransport implements Transport {
  constructor(readonly baseUrl: string, private readonly fetchFn: typeof fetch = fetch) {}

  async getGroups(anchor: string): Promise<GroupsResponse> {
    const response = await this.fetchFn(
      `${this.baseUrl}/groups?anchor=${encodeURIComponent(anchor)}`,
    );
    if (!response.ok) {
      throw new Error(`groups query failed: ${response.status}`);
    }
    return (await response.json()) as GroupsResponse;
  }

  async postInteraction(body: InteractionBody): Promise<PostResult> {
    const response = await this.fetchFn(`${this.baseUrl}/interactions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const data = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      return { ok: false, status: response.status, error: String(data.error ?? response.status) };
    }
    return { ok: true, record: data as never };
  }

  async getPolicy(): Promise<PolicyResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/policy`);
    if (!response.ok) {
      throw new Error(`policy query failed: ${response.status}`);
    }
    return (await response.json()) as PolicyResponse;
  }
}

export interface SocketLike {
  onOpen(cb: () => void): void;
  onBinary(cb: (data: Uint8Array) => void): void;
  onText(cb: (text: string) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

/** Route stream messages into the state: a binary PNG is paired with the
 * next JSON frame message; texts with a `kind` field are events. */
export function attachStream(
  state: ClientState,
  socket: SocketLike,
  onFrameApplied?: () => void,
): void {
  let pendingPng: Uint8Array | null = null;
  socket.onOpen(() => state.onConnectionChange("open"));
  socket.onClose(() => state.onConnectionChange("closed"));
  socket.onBinary((data) => {
    pendingPng = data;
  });
  socket.onText((text) => {
    const message = JSON.parse(text) as Record<string, unknown>;
    if (typeof message.kind === "string") {
      state.onEvent(message as never);
      return;
    }
    state.onFrame({ meta: message as unknown as FrameMessage, png: pendingPng });
    pendingPng = null;
    onFrameApplied?.();
  });
}

export function browserSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  ws.binaryType = "arraybuffer";
  const handlers = {
    open: [] as Array<() => void>,
    binary: [] as Array<(d: Uint8Array) => void>,
    text: [] as Array<(t: string) => void>,
    close: [] as Array<() => void>,
  };
  ws.onopen = () => handlers.open.forEach((cb) => cb());
  ws.onclose = () => handlers.close.forEach((cb) => cb());
  ws.onmessage = (event) => {
    if (typeof event.data === "string") {
      handlers.text.forEach((cb) => cb(event.data));
    } else {
      const bytes = new Uint8Array(event.data as ArrayBuffer);
      handlers.binary.forEach((cb) => cb(bytes));
    }
  };
  return {
    onOpen: (cb) => handlers.open.push(cb),
    onBinary: (cb) => handlers.binary.push(cb),
    onText: (cb) => handlers.text.push(cb),
    onClose: (cb) => handlers.close.push(cb),
    close: () => ws.close(),
  };
}
