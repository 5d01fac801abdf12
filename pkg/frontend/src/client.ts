// WebSocket wrapper: parse-validate inbound traffic, reconnect with
// backoff, expose a plain callback surface so the store stays testable.

import { Command, parseMessage, serializeCommand, ServerMessage } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export interface ClientCallbacks {
  onOpen(): void;
  onMessage(message: ServerMessage): void;
  onClose(): void;
  onParseError(reason: string): void;
}

export class ServiceClient {
  private socket: SocketLike | null = null;
  private closed = false;
  private retryMs = 500;

  constructor(
    private readonly url: string,
    private readonly callbacks: ClientCallbacks,
    private readonly makeSocket: (url: string) => SocketLike = (u) =>
      new WebSocket(u) as unknown as SocketLike,
    private readonly schedule: (fn: () => void, ms: number) => void = (fn, ms) => {
      setTimeout(fn, ms);
    },
  ) {}

  connect(): void {
    this.closed = false;
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.retryMs = 500;
      this.callbacks.onOpen();
    };
    socket.onmessage = (ev) => {
      try {
        this.callbacks.onMessage(parseMessage(String(ev.data)));
      } catch (err) {
        this.callbacks.onParseError(err instanceof Error ? err.message : String(err));
      }
    };
    socket.onclose = () => {
      this.socket = null;
      this.callbacks.onClose();
      if (!this.closed) {
        this.schedule(() => this.connect(), this.retryMs);
        this.retryMs = Math.min(this.retryMs * 2, 5000);
      }
    };
    socket.onerror = () => {
      // onclose follows; nothing else to do
    };
  }

  send(command: Command): boolean {
    if (!this.socket) return false;
    try {
      this.socket.send(serializeCommand(command));
      return true;
    } catch {
      return false;
    }
  }

  sendRaw(payload: string): boolean {
    if (!this.socket) return false;
    try {
      this.socket.send(payload);
      return true;
    } catch {
      return false;
    }
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
