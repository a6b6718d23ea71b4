"""WebSocket bridge exposing live sessions to operator clients.

One JSON message schema, versioned by the hello handshake:

  client -> server
    {"type": "hello", "version": 1}
    {"type": "create", "model": "biped", "tracking": "perfect",
     "rate": 1000, "broadcast_rate": 50, "weights": null}
    {"type": "command", "command": {...CommandMessage...}}
  server -> client
    {"type": "hello", "version": 1, "session": {...} | null}
    {"type": "created", "session": {...}}
    {"type": "ack", "seq": N}
    {"type": "error", "code": str, "text": str}
    {"type": "snapshot", "tick": N, ...}

Each session runs one tick loop; snapshots fan out through size-one
queues, so a slow reader only drops frames and never stalls the loop.
Exactly one client holds command authority per session.
"""

from __future__ import annotations

import asyncio
import json
import time

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .cli import resolve_asset
from .model import load_model_file
from .retarget import StepError, WeightSet
from .runtime import CommandError, CommandMessage, Session, TrackingModel

PROTOCOL_VERSION = 1


def snapshot_from_record(record, session: Session) -> dict:
    return {
        "type": "snapshot",
        "tick": record.tick,
        "commanded": record.commanded,
        "desired": record.desired,
        "measured": record.measured,
        "wrenches": record.wrenches,
        "contact_modes": record.contact_modes,
        "switch_progress": record.switch_progress,
        "cop": record.cop,
        "friction": record.friction,
        "friction_limits": {
            e.name: e.spec.friction for e in session.state.contacts
        },
        "foot_geometry": {
            e.name: [e.spec.half_length_x, e.spec.half_length_y]
            for e in session.state.contacts
            if e.spec.kind == "plane"
        },
        "saturations": record.saturations,
        "max_force_gauge": record.max_force_gauge,
        "equilibrium_residual": record.equilibrium_residual,
        "dx_norm": record.dx_norm,
        "qp_iterations": record.qp_iterations,
        "stopped": record.stopped,
        "events": record.events,
    }


class LiveSession:
    """Session plus its tick task and subscriber queues."""

    def __init__(self, session_id: str, session: Session, broadcast_rate: float, realtime: bool):
        self.id = session_id
        self.session = session
        self.broadcast_every = max(1, round(session.tick_rate / broadcast_rate))
        self.realtime = realtime
        self.subscribers: dict[int, asyncio.Queue] = {}
        self.authority: int | None = None
        self.lifecycle = "created"
        self.task: asyncio.Task | None = None
        self.overruns = 0
        self._next_key = 0

    def descriptor(self) -> dict:
        return {
            "id": self.id,
            "model": self.session.model.name,
            "tick_rate": self.session.tick_rate,
            "broadcast_rate": self.session.tick_rate / self.broadcast_every,
            "clients": len(self.subscribers),
            "lifecycle": self.lifecycle,
        }

    def subscribe(self) -> tuple[int, asyncio.Queue]:
        key = self._next_key
        self._next_key += 1
        queue: asyncio.Queue = asyncio.Queue(maxsize=1)
        self.subscribers[key] = queue
        return key, queue

    def unsubscribe(self, key: int) -> None:
        self.subscribers.pop(key, None)
        if self.authority == key:
            self.authority = None

    def publish(self, snapshot: dict) -> None:
        for queue in self.subscribers.values():
            if queue.full():  # drop-to-latest, never block the loop
                try:
                    queue.get_nowait()
                except asyncio.QueueEmpty:
                    pass
            queue.put_nowait(snapshot)

    async def run(self) -> None:
        self.lifecycle = "live"
        period = 1.0 / self.session.tick_rate
        next_deadline = time.perf_counter() + period
        try:
            while self.lifecycle == "live":
                try:
                    record = self.session.tick()
                except StepError:
                    self.lifecycle = "halted"
                    self.publish({"type": "error", "code": "halted", "text": "retargeting step failed"})
                    break
                if record.tick % self.broadcast_every == 0:
                    self.publish(snapshot_from_record(record, self.session))
                if self.realtime:
                    now = time.perf_counter()
                    delay = next_deadline - now
                    if delay > 0:
                        await asyncio.sleep(delay)
                    else:
                        self.overruns += 1  # logged, not fatal
                        await asyncio.sleep(0)  # still yield so sends proceed
                    next_deadline = max(next_deadline + period, now)
                else:
                    await asyncio.sleep(0)  # cooperative yield, virtual time
        finally:
            if self.lifecycle == "live":
                self.lifecycle = "closed"

    def stop(self) -> None:
        self.lifecycle = "closed"
        if self.task is not None:
            self.task.cancel()


def create_app(asset_resolver=resolve_asset, realtime: bool = True) -> FastAPI:
    app = FastAPI(title="mcretarget teleoperation bridge")
    sessions: dict[str, LiveSession] = {}
    app.state.sessions = sessions

    def error(code: str, text: str) -> dict:
        return {"type": "error", "code": code, "text": text}

    @app.websocket("/session/{session_id}")
    async def session_socket(ws: WebSocket, session_id: str):
        await ws.accept()
        live = sessions.get(session_id)
        key: int | None = None
        queue: asyncio.Queue | None = None
        sender: asyncio.Task | None = None

        async def send_loop(q: asyncio.Queue):
            while True:
                item = await q.get()
                await ws.send_text(json.dumps(item))

        try:
            while True:
                raw = await ws.receive_text()
                try:
                    data = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps(error("bad-json", "message is not valid JSON")))
                    continue
                mtype = data.get("type")
                if mtype == "hello":
                    await ws.send_text(json.dumps({
                        "type": "hello",
                        "version": PROTOCOL_VERSION,
                        "session": live.descriptor() if live else None,
                    }))
                elif mtype == "create":
                    if live is not None:
                        await ws.send_text(json.dumps(error("exists", f"session '{session_id}' already exists")))
                        continue
                    try:
                        model = load_model_file(asset_resolver(data.get("model", "biped"), ".urdf"))
                        weights = (
                            WeightSet.from_file(asset_resolver(data["weights"], ".cfg"))
                            if data.get("weights")
                            else WeightSet()
                        )
                        tracking = TrackingModel(mode=data.get("tracking", "perfect"))
                        session = Session(
                            model,
                            weights,
                            tracking,
                            tick_rate=float(data.get("rate", 1000.0)),
                            probe_period=int(data.get("probe_period", 50)),
                        )
                    except Exception as exc:
                        await ws.send_text(json.dumps(error("create-failed", str(exc))))
                        continue
                    live = LiveSession(
                        session_id,
                        session,
                        broadcast_rate=float(data.get("broadcast_rate", 50.0)),
                        realtime=realtime,
                    )
                    sessions[session_id] = live
                    key, queue = live.subscribe()
                    live.authority = key
                    sender = asyncio.create_task(send_loop(queue))
                    live.task = asyncio.create_task(live.run())
                    await ws.send_text(json.dumps({"type": "created", "session": live.descriptor()}))
                elif mtype == "command":
                    if live is None:
                        await ws.send_text(json.dumps(error("no-session", "create or join a session first")))
                        continue
                    if key is None:
                        key, queue = live.subscribe()
                        sender = asyncio.create_task(send_loop(queue))
                    if live.authority is None:
                        live.authority = key
                    if live.authority != key:
                        await ws.send_text(json.dumps(error("authority-held", "another client holds command authority")))
                        continue
                    try:
                        msg = CommandMessage.from_dict(data.get("command", {}))
                        live.session.ingest(msg)
                    except CommandError as exc:
                        await ws.send_text(json.dumps(error("rejected", str(exc))))
                        continue
                    await ws.send_text(json.dumps({"type": "ack", "seq": msg.seq}))
                elif mtype == "subscribe":
                    if live is None:
                        await ws.send_text(json.dumps(error("no-session", "no such session")))
                        continue
                    if key is None:
                        key, queue = live.subscribe()
                        sender = asyncio.create_task(send_loop(queue))
                    await ws.send_text(json.dumps({"type": "hello", "version": PROTOCOL_VERSION, "session": live.descriptor()}))
                else:
                    await ws.send_text(json.dumps(error("bad-type", f"unknown message type '{mtype}'")))
        except WebSocketDisconnect:
            pass
        finally:
            if sender is not None:
                sender.cancel()
            if live is not None and key is not None:
                live.unsubscribe(key)

    return app


def main(argv=None) -> int:  # pragma: no cover - manual entry point
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(prog="mcretarget-server")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8723)
    args = parser.parse_args(argv)
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":  # pragma: no cover
    import sys

    sys.exit(main())
