// Thin WebSocket wrapper: serialize outgoing messages, surface incoming ones.

import type { ClientMessage, ServerMessage } from "./protocol.js";

export class SessionClient {
  private ws: WebSocket;
  private seq = 0;

  constructor(
    url: string,
    private readonly onMessage: (msg: ServerMessage) => void,
    private readonly onStatus: (open: boolean) => void,
  ) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => this.onStatus(true);
    this.ws.onclose = () => this.onStatus(false);
    this.ws.onmessage = (ev) => this.onMessage(JSON.parse(ev.data as string));
  }

  /** Sends with a timestamp echo so replies carry round-trip latency. */
  send(msg: ClientMessage, nowMs: number): void {
    this.seq += 1;
    this.ws.send(JSON.stringify({ ...msg, echo: nowMs }));
  }

  close(): void {
    this.ws.close();
  }
}
