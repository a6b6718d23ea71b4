/**
 * End-to-end acceptance against the real Python bridge: spawns
 * `python3 -m mcretarget.server`, drives it through the SessionClient,
 * and checks the operator-facing behaviours:
 *   - a jog is reflected in a snapshot within 3 broadcast periods,
 *   - the switch progress-bar duration matches the server-reported
 *     2.309 s within one broadcast period,
 *   - the CoP gauge reaches the pad edge exactly when the server
 *     flags CoP saturation on a reach replay.
 */

import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { SessionClient, SocketLike } from "../src/client.js";
import { contactGauges, switchDurationSeconds } from "../src/gauges.js";
import { Snapshot, commands } from "../src/protocol.js";

const PORT = 8000 + Math.floor(Math.random() * 20000);
const RATE = 1000;
const BROADCAST = 50;
const BROADCAST_PERIOD_TICKS = RATE / BROADCAST;

let server: ChildProcess;

function wrap(ws: WebSocket): SocketLike {
  return {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    set onmessage(fn: ((ev: { data: string }) => void) | null) {
      ws.removeAllListeners("message");
      if (fn) ws.on("message", (data) => fn({ data: data.toString() }));
    },
    set onopen(fn: (() => void) | null) {
      if (fn) ws.on("open", fn);
    },
    set onclose(fn: (() => void) | null) {
      if (fn) ws.on("close", fn);
    },
  } as SocketLike;
}

async function connect(sessionId: string): Promise<SessionClient> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const ws = new WebSocket(`ws://127.0.0.1:${PORT}/session/${sessionId}`);
      await new Promise<void>((resolve, reject) => {
        ws.once("open", () => resolve());
        ws.once("error", reject);
      });
      return new SessionClient(wrap(ws));
    } catch {
      await new Promise((r) => setTimeout(r, 200));
    }
  }
  throw new Error("bridge did not come up");
}

async function nextSnapshot(client: SessionClient, timeoutMs = 30_000): Promise<Snapshot> {
  const seen = client.snapshotsSeen;
  const t0 = Date.now();
  while (client.snapshotsSeen === seen) {
    if (Date.now() - t0 > timeoutMs) throw new Error("no snapshot in time");
    await new Promise((r) => setTimeout(r, 5));
  }
  return client.latest!;
}

async function waitFor(
  client: SessionClient,
  predicate: (snap: Snapshot) => boolean,
  timeoutMs = 60_000,
): Promise<Snapshot> {
  const t0 = Date.now();
  for (;;) {
    const snap = await nextSnapshot(client, timeoutMs);
    if (predicate(snap)) return snap;
    if (Date.now() - t0 > timeoutMs) throw new Error("condition not reached in time");
  }
}

beforeAll(async () => {
  server = spawn("python3", ["-m", "mcretarget.server", "--port", String(PORT)], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  server.stderr?.on("data", () => undefined);
});

afterAll(() => {
  server.kill("SIGKILL");
});

describe("bridge round trip", () => {
  it("jog is reflected within three broadcast periods; switch bar and CoP gauge track the server", async () => {
    const client = await connect("accept");
    client.create({ model: "biped", rate: RATE, broadcastRate: BROADCAST });
    const first = await nextSnapshot(client);
    expect(first.tick).toBeGreaterThan(0);

    // --- jog round trip ------------------------------------------------
    const before = client.latest!;
    const x0 = before.commanded["hand_l"].position[0];
    client.command(commands.jog("hand_l", [0, 0, 0, 0.02, 0, 0]));
    const reflected = await waitFor(
      client,
      (snap) => Math.abs(snap.commanded["hand_l"].position[0] - (x0 + 0.02)) < 1e-12,
    );
    expect(reflected.tick - before.tick).toBeLessThanOrEqual(3 * BROADCAST_PERIOD_TICKS);

    // --- switch progress-bar duration ----------------------------------
    const uiDuration = switchDurationSeconds(RATE); // what the bar animates
    expect(uiDuration).toBeCloseTo(2.309, 9);
    client.command(commands.triggerSwitch("foot_l", "remove"));
    const transitioning = await waitFor(
      client,
      (snap) => (snap.switch_progress["foot_l"] ?? 0) > 0,
    );
    const progressTicks = Math.round(transitioning.switch_progress["foot_l"] * 2309);
    const triggerTick = transitioning.tick - progressTicks + 1;
    const done = await waitFor(
      client,
      (snap) => snap.contact_modes["foot_l"] === "disabled",
      120_000,
    );
    const measured = (done.tick - triggerTick + 1) / RATE;
    // the completion snapshot lags the true completion tick by at most
    // one broadcast period
    expect(measured).toBeGreaterThanOrEqual(uiDuration - 1e-9);
    expect(measured).toBeLessThanOrEqual(uiDuration + BROADCAST_PERIOD_TICKS / RATE + 1e-9);
    client.close();
  }, 180_000);

  it("CoP gauge edge-contact coincides with the server saturation flag on a reach replay", async () => {
    const client = await connect("reach");
    client.create({ model: "biped", rate: RATE, broadcastRate: BROADCAST });
    const first = await nextSnapshot(client);
    const gauges0 = contactGauges(first);
    for (const g of gauges0) {
      if (g.cop) expect(g.cop.atEdge).toBe(false); // starts interior
    }
    for (let i = 0; i < 120; i++) {
      client.command(commands.jog("hand_l", [0, 0, 0, 0.005, 0, 0]));
    }
    const saturated = await waitFor(
      client,
      (snap) => snap.saturations.some((s) => s.startsWith("cop:")),
      120_000,
    );
    const gauges = contactGauges(saturated);
    const flagged = new Set(
      saturated.saturations
        .filter((s) => s.startsWith("cop:"))
        .map((s) => s.split(":")[1].replace(/[+-][xy]$/, "")),
    );
    for (const name of flagged) {
      const gauge = gauges.find((g) => g.name === name)!;
      expect(gauge.cop).not.toBeNull();
      expect(gauge.cop!.atEdge).toBe(true); // the dot sits on the pad edge
      expect(gauge.saturated).toBe(true);
    }
    client.close();
  }, 180_000);
});
