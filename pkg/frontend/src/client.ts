/** WebSocket session client: command sequencing, ack tracking, and a
 * drop-to-latest snapshot slot so rendering never queues stale frames. */

import {
  AckMsg,
  CommandBody,
  ErrorMsg,
  SessionDescriptor,
  Snapshot,
  parseServerMessage,
} from "./protocol.js";

/** Minimal WebSocket surface so tests can substitute a fake. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
}

export interface PendingCommand {
  seq: number;
  body: CommandBody;
}

export interface ClientEvents {
  onSnapshot?: (snap: Snapshot) => void;
  onAck?: (msg: AckMsg) => void;
  onReject?: (msg: ErrorMsg, pending: PendingCommand | null) => void;
  onSession?: (descriptor: SessionDescriptor) => void;
  onDisconnect?: () => void;
}

export class SessionClient {
  private seq = 0;
  private socket: SocketLike;
  private pending: PendingCommand[] = [];
  /** latest snapshot only; older ones are dropped, never replayed */
  latest: Snapshot | null = null;
  snapshotsSeen = 0;
  session: SessionDescriptor | null = null;
  connected = false;

  constructor(socket: SocketLike, public events: ClientEvents = {}) {
    this.socket = socket;
    socket.onopen = () => {
      this.connected = true;
      this.sendRaw({ type: "hello", version: 1 });
    };
    socket.onmessage = (ev) => this.handle(ev.data);
    socket.onclose = () => {
      this.connected = false;
      this.events.onDisconnect?.();
    };
  }

  private handle(raw: string): void {
    const msg = parseServerMessage(raw);
    if (!msg) return;
    switch (msg.type) {
      case "snapshot":
        this.latest = msg;
        this.snapshotsSeen += 1;
        this.events.onSnapshot?.(msg);
        break;
      case "ack": {
        this.pending = this.pending.filter((p) => p.seq !== msg.seq);
        this.events.onAck?.(msg);
        break;
      }
      case "error": {
        // a rejection cancels the oldest unacknowledged command
        const failed = this.pending.shift() ?? null;
        this.events.onReject?.(msg, failed);
        break;
      }
      case "hello":
        this.session = msg.session;
        if (msg.session) this.events.onSession?.(msg.session);
        break;
      case "created":
        this.session = msg.session;
        this.events.onSession?.(msg.session);
        break;
    }
  }

  private sendRaw(payload: unknown): void {
    this.socket.send(JSON.stringify(payload));
  }

  create(options: { model?: string; tracking?: string; rate?: number; broadcastRate?: number } = {}): void {
    this.sendRaw({
      type: "create",
      model: options.model ?? "biped",
      tracking: options.tracking ?? "perfect",
      rate: options.rate ?? 1000,
      broadcast_rate: options.broadcastRate ?? 50,
    });
  }

  subscribe(): void {
    this.sendRaw({ type: "subscribe" });
  }

  /** Sends a command with the next sequence number; returns it. */
  command(body: Omit<CommandBody, "seq">): PendingCommand {
    this.seq += 1;
    const full: CommandBody = { ...body, seq: this.seq };
    const pending = { seq: this.seq, body: full };
    this.pending.push(pending);
    this.sendRaw({ type: "command", command: full });
    return pending;
  }

  hasPending(kind?: string): boolean {
    if (kind === undefined) return this.pending.length > 0;
    return this.pending.some((p) => p.body.kind === kind);
  }

  close(): void {
    this.socket.close();
  }
}

/** Rate limiter for continuous controls (force sliders): at most one
 * message per interval, always flushing the final value. */
export class RateLimiter {
  private last = Number.NEGATIVE_INFINITY;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private queued: (() => void) | null = null;

  constructor(private minIntervalMs: number, private now: () => number = () => Date.now()) {}

  submit(fire: () => void): void {
    const t = this.now();
    const wait = this.last + this.minIntervalMs - t;
    if (wait <= 0) {
      this.last = t;
      fire();
      return;
    }
    this.queued = fire;
    if (this.timer === null) {
      this.timer = setTimeout(() => {
        this.timer = null;
        const fn = this.queued;
        this.queued = null;
        if (fn) {
          this.last = this.now();
          fn();
        }
      }, wait);
    }
  }
}
