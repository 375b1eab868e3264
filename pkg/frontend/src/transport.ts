/**
 * Thin socket wrapper: queues outgoing text while disconnected, flushes on
 * (re)connect, and surfaces messages stuck in the queue past a timeout.
 * Structural SocketLike keeps it usable with both the browser WebSocket and
 * the `ws` package in node tests.
 */

export interface SocketLike {
  readonly readyState: number;
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "close" | "error", listener: () => void): void;
  addEventListener(type: "message", listener: (ev: { data: unknown }) => void): void;
}

export type SocketFactory = (url: string) => SocketLike;

const OPEN = 1;

export interface TransportOptions {
  queueTimeoutMs?: number;
  onQueueTimeout?: (pending: number) => void;
  setTimeoutFn?: typeof setTimeout;
  clearTimeoutFn?: typeof clearTimeout;
}

export class QueueingTransport {
  private socket: SocketLike | null = null;
  private queue: string[] = [];
  private timeoutHandle: ReturnType<typeof setTimeout> | null = null;
  private messageHandlers: ((data: unknown) => void)[] = [];
  private openHandlers: (() => void)[] = [];
  private closeHandlers: (() => void)[] = [];

  constructor(
    private readonly url: string,
    private readonly factory: SocketFactory,
    private readonly options: TransportOptions = {},
  ) {}

  get pending(): number {
    return this.queue.length;
  }

  get connected(): boolean {
    return this.socket !== null && this.socket.readyState === OPEN;
  }

  onMessage(handler: (data: unknown) => void): void {
    this.messageHandlers.push(handler);
  }

  onOpen(handler: () => void): void {
    this.openHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  connect(): void {
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.addEventListener("open", () => {
      this.flush();
      for (const h of this.openHandlers) h();
    });
    socket.addEventListener("message", (ev: { data: unknown }) => {
      for (const h of this.messageHandlers) h(ev.data);
    });
    socket.addEventListener("close", () => {
      if (this.socket === socket) this.socket = null;
      for (const h of this.closeHandlers) h();
    });
  }

  send(text: string): void {
    if (this.connected && this.socket) {
      this.socket.send(text);
      return;
    }
    this.queue.push(text);
    this.armTimeout();
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
  }

  private flush(): void {
    if (this.timeoutHandle !== null) {
      (this.options.clearTimeoutFn ?? clearTimeout)(this.timeoutHandle);
      this.timeoutHandle = null;
    }
    const backlog = this.queue;
    this.queue = [];
    for (const text of backlog) {
      if (this.connected && this.socket) this.socket.send(text);
      else this.queue.push(text);
    }
  }

  private armTimeout(): void {
    const timeoutMs = this.options.queueTimeoutMs;
    if (!timeoutMs || this.timeoutHandle !== null) return;
    this.timeoutHandle = (this.options.setTimeoutFn ?? setTimeout)(() => {
      this.timeoutHandle = null;
      if (this.queue.length > 0) {
        this.options.onQueueTimeout?.(this.queue.length);
      }
    }, timeoutMs);
  }
}
