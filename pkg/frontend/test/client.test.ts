import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { SessionClient } from "../src/client.js";
import { QueueingTransport, SocketLike } from "../src/transport.js";

class FakeSocket implements SocketLike {
  readyState = 0;
  sent: string[] = [];
  private listeners = new Map<string, ((ev: { data: unknown }) => void)[]>();

  addEventListener(type: string, listener: (ev: { data: unknown }) => void): void {
    const list = this.listeners.get(type) ?? [];
    list.push(listener);
    this.listeners.set(type, list);
  }

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.readyState = 3;
    this.fire("close", {});
  }

  open(): void {
    this.readyState = 1;
    this.fire("open", {});
  }

  receive(data: unknown): void {
    this.fire("message", { data });
  }

  private fire(type: string, ev: unknown): void {
    for (const l of this.listeners.get(type) ?? []) l(ev as { data: unknown });
  }
}

function makeClient(options: { debounceMs?: number } = {}) {
  const socket = new FakeSocket();
  const transport = new QueueingTransport("ws://test", () => socket);
  const client = new SessionClient(transport, options);
  client.connect();
  socket.open();
  return { socket, transport, client };
}

describe("SessionClient", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("a burst of slider changes emits exactly one set_param", () => {
    const { socket, client } = makeClient();
    for (let v = 10; v <= 90; v += 5) client.setParam("fx-1", "threshold", v);
    expect(socket.sent).toHaveLength(0);
    vi.advanceTimersByTime(50);
    expect(socket.sent).toHaveLength(1);
    const msg = JSON.parse(socket.sent[0]!);
    expect(msg.command).toEqual({ kind: "set_param", effect_id: "fx-1", key: "threshold", value: 90 });
  });

  it("separate settled changes each emit one set_param", () => {
    const { socket, client } = makeClient();
    client.setParam("fx-1", "threshold", 40);
    vi.advanceTimersByTime(50);
    client.setParam("fx-1", "threshold", 70);
    vi.advanceTimersByTime(50);
    expect(socket.sent).toHaveLength(2);
  });

  it("different keys debounce independently", () => {
    const { socket, client } = makeClient();
    client.setParam("fx-1", "threshold", 40);
    client.setParam("fx-2", "speed", 100);
    vi.advanceTimersByTime(50);
    expect(socket.sent).toHaveLength(2);
  });

  it("sequence numbers increase per command", () => {
    const { socket, client } = makeClient();
    client.send({ kind: "pause_video" });
    client.send({ kind: "resume_video" });
    const seqs = socket.sent.map((s) => JSON.parse(s).seq);
    expect(seqs).toEqual([1, 2]);
  });

  it("read-only clients never send", () => {
    const socket = new FakeSocket();
    const transport = new QueueingTransport("ws://test", () => socket);
    const client = new SessionClient(transport, { readOnly: true });
    client.connect();
    socket.open();
    client.send({ kind: "pause_video" });
    client.setParam("fx-1", "threshold", 5);
    vi.advanceTimersByTime(100);
    expect(socket.sent).toHaveLength(0);
  });

  it("incoming messages update the screen state", () => {
    const { socket, client } = makeClient();
    socket.receive(JSON.stringify({ type: "overlay", frame: 7, svg: "<svg/>" }));
    expect(client.state.frameIndex).toBe(7);
    expect(client.state.overlaySvg).toBe("<svg/>");
  });
});

describe("QueueingTransport", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("queues while disconnected and flushes on open, in order", () => {
    const socket = new FakeSocket();
    const transport = new QueueingTransport("ws://test", () => socket);
    transport.connect();
    transport.send("a");
    transport.send("b");
    expect(socket.sent).toHaveLength(0);
    expect(transport.pending).toBe(2);
    socket.open();
    expect(socket.sent).toEqual(["a", "b"]);
    expect(transport.pending).toBe(0);
  });

  it("surfaces stuck queues after the timeout", () => {
    const socket = new FakeSocket();
    let surfaced = -1;
    const transport = new QueueingTransport("ws://test", () => socket, {
      queueTimeoutMs: 1000,
      onQueueTimeout: (n) => (surfaced = n),
    });
    transport.connect();
    transport.send("a");
    vi.advanceTimersByTime(1000);
    expect(surfaced).toBe(1);
  });
});
