import { describe, expect, it, vi } from "vitest";

import { RateLimiter, SessionClient, SocketLike } from "../src/client.js";
import { commands } from "../src/protocol.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  onmessage: ((ev: { data: string }) => void) | null = null;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }
  close(): void {
    this.onclose?.();
  }
  open(): void {
    this.onopen?.();
  }
  push(payload: unknown): void {
    this.onmessage?.({ data: JSON.stringify(payload) });
  }
  lastSent(): any {
    return JSON.parse(this.sent[this.sent.length - 1]);
  }
}

function snapshot(tick: number): any {
  return { type: "snapshot", tick, commanded: {}, desired: {}, measured: {}, wrenches: {},
    contact_modes: {}, switch_progress: {}, cop: {}, friction: {}, friction_limits: {},
    foot_geometry: {}, saturations: [], max_force_gauge: {}, equilibrium_residual: 0,
    dx_norm: 0, qp_iterations: 0, stopped: false, events: [] };
}

describe("SessionClient", () => {
  it("sends hello on open and assigns increasing sequence numbers", () => {
    const socket = new FakeSocket();
    const client = new SessionClient(socket);
    socket.open();
    expect(socket.lastSent().type).toBe("hello");
    const a = client.command(commands.jog("hand_l", [0, 0, 0, 1e-3, 0, 0]));
    const b = client.command(commands.emergencyStop());
    expect(a.seq).toBe(1);
    expect(b.seq).toBe(2);
    expect(socket.lastSent().command.kind).toBe("emergency_stop");
  });

  it("keeps only the latest snapshot (drop-to-latest)", () => {
    const socket = new FakeSocket();
    const client = new SessionClient(socket);
    socket.open();
    for (let t = 1; t <= 5; t++) socket.push(snapshot(t));
    expect(client.latest!.tick).toBe(5);
    expect(client.snapshotsSeen).toBe(5);
  });

  it("clears pending commands on ack and rolls back on rejection", () => {
    const socket = new FakeSocket();
    const rejected: any[] = [];
    const client = new SessionClient(socket, {
      onReject: (msg, pending) => rejected.push([msg.code, pending?.body.kind]),
    });
    socket.open();
    client.command(commands.triggerSwitch("foot_l", "remove"));
    expect(client.hasPending("trigger_switch")).toBe(true);
    socket.push({ type: "ack", seq: 1 });
    expect(client.hasPending()).toBe(false);
    client.command(commands.triggerSwitch("foot_l", "remove"));
    socket.push({ type: "error", code: "rejected", text: "already in transition" });
    expect(client.hasPending()).toBe(false);
    expect(rejected).toEqual([["rejected", "trigger_switch"]]);
  });

  it("reports disconnects", () => {
    const socket = new FakeSocket();
    const onDisconnect = vi.fn();
    new SessionClient(socket, { onDisconnect });
    socket.open();
    socket.close();
    expect(onDisconnect).toHaveBeenCalledOnce();
  });
});

describe("RateLimiter", () => {
  it("passes the first call and coalesces bursts to the interval", async () => {
    vi.useFakeTimers();
    let t = 0;
    const limiter = new RateLimiter(50, () => t);
    const fired: number[] = [];
    limiter.submit(() => fired.push(1));
    limiter.submit(() => fired.push(2));
    limiter.submit(() => fired.push(3));
    expect(fired).toEqual([1]);
    t = 60;
    await vi.advanceTimersByTimeAsync(60);
    // only the final queued value fires, at most one per interval
    expect(fired).toEqual([1, 3]);
    vi.useRealTimers();
  });

  it("enforces at most 20 Hz for a 50 ms interval", async () => {
    vi.useFakeTimers();
    let t = 0;
    const limiter = new RateLimiter(50, () => t);
    let count = 0;
    for (let burst = 0; burst < 10; burst++) {
      for (let i = 0; i < 20; i++) limiter.submit(() => count++);
      t += 50;
      await vi.advanceTimersByTimeAsync(50);
    }
    expect(count).toBeLessThanOrEqual(11);  // 10 intervals + the initial call
    vi.useRealTimers();
  });
});
