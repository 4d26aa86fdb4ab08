"""Operator bridge: live episode state over a WebSocket message protocol.

One session = one episode = one connection. The episode loop runs in a
worker thread and talks to the socket handler through two queues; it blocks
only while waiting for a decision (or verification) reply, with a timeout
that falls back to the built-in heuristic so an absent operator never stalls
an episode.

Message envelope: {"kind": <kind>, "seq": <monotone int>, "payload": {...}}
with schema version announced in the first STATE_SNAPSHOT. Kinds:
STATE_SNAPSHOT, DECISION_REQUEST, DECISION_REPLY, VERIFY_REQUEST,
VERIFY_REPLY, EPISODE_DONE, ERROR.
"""
from __future__ import annotations

import queue
import threading
import time

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import episode as ep
from . import semantics
from .gridmap import FREE, OBSTACLE

PROTOCOL_VERSION = 1

STATE_SNAPSHOT = "STATE_SNAPSHOT"
DECISION_REQUEST = "DECISION_REQUEST"
DECISION_REPLY = "DECISION_REPLY"
VERIFY_REQUEST = "VERIFY_REQUEST"
VERIFY_REPLY = "VERIFY_REPLY"
EPISODE_DONE = "EPISODE_DONE"
ERROR = "ERROR"

SNAPSHOT_MIN_INTERVAL = 0.1  # seconds; coalesce faster updates


def render_map_rows(episode: ep.Episode) -> list[str]:
    """Partial map as text rows: '#' wall, '.' free, '?' unknown, '!' frontier."""
    chars = np.full(episode.partial.shape, "?", dtype="<U1")
    chars[episode.partial == FREE] = "."
    chars[episode.partial == OBSTACLE] = "#"
    for cell in episode._frontier_cells:
        chars[cell] = "!"
    return ["".join(row) for row in chars]


def state_payload(episode: ep.Episode) -> dict:
    return {
        "protocol_version": PROTOCOL_VERSION,
        "position": [episode.state.position[0], episode.state.position[1]],
        "heading": episode.state.heading,
        "steps": episode.state.step_count,
        "rotations": sum(1 for a in episode.actions if a in (ep.TURN_LEFT, ep.TURN_RIGHT)),
        "traveled_m": episode.state.path_length,
        "resolution": episode.res,
        "map_rows": render_map_rows(episode),
        "directions": [
            {
                "id": d.id,
                "bearing": d.bearing,
                "status": d.status,
                "inspected": d.inspected,
                "support_size": len(d.support),
            }
            for d in episode.registry.directions
        ],
        "category": episode.world.category,
    }


class HumanBridgeSelector(semantics.DirectionSelector):
    """Asks the connected operator; falls back to the heuristic on timeout,
    malformed replies (after one re-request), or a missing client."""

    kind = "human-bridge"

    def __init__(self, session, timeout: float):
        self.session = session
        self.timeout = timeout
        self.fallback = semantics.HeuristicSelector()

    def choose(self, query: semantics.SelectorQuery) -> semantics.SelectorReply:
        if self.timeout <= 0 or not self.session.client_connected.is_set():
            return self.fallback.choose(query)
        option_ids = set(query.option_ids())
        request_id = self.session.next_request_id()
        payload = {
            "request_id": request_id,
            "category": query.target_category,
            "options": [
                {
                    "id": o.direction_id,
                    "bearing": o.bearing,
                    "support_size": o.support_size,
                    "snapshot": None
                    if o.snapshot is None
                    else {
                        "captured_at_step": o.snapshot.captured_at_step,
                        "camera_yaw": o.snapshot.camera_yaw,
                        "visible_cell_count": len(o.snapshot.visible_cells),
                        "contains_target": o.snapshot.contains_target,
                    },
                }
                for o in query.options
            ],
            "current_choice": query.current_choice,
        }
        for attempt in range(2):
            self.session.send(DECISION_REQUEST, payload)
            reply = self.session.await_reply(DECISION_REPLY, request_id, self.timeout)
            if reply is None:  # timeout or disconnect
                break
            chosen = reply.get("chosen")
            if chosen in option_ids:
                return semantics.SelectorReply(
                    chosen=chosen,
                    target_sighted=any(
                        o.snapshot is not None and o.snapshot.contains_target
                        for o in query.options
                    ),
                )
            self.session.send(
                ERROR,
                {
                    "request_id": request_id,
                    "message": f"direction {chosen!r} is not among the offered options",
                },
            )
        return self.fallback.choose(query)


class BridgeSession:
    """Runs one episode while mirroring its state onto a message stream."""

    def __init__(self, world, config: ep.EpisodeConfig, decision_timeout: float = 30.0,
                 human_judge: bool = False, judge_timeout: float = 15.0):
        self.world = world
        self.config = config
        self.decision_timeout = decision_timeout
        self.human_judge = human_judge
        self.judge_timeout = judge_timeout
        self.outbox: queue.Queue = queue.Queue()
        self.replies: queue.Queue = queue.Queue()
        self.client_connected = threading.Event()
        self.record: ep.EpisodeRecord | None = None
        self._seq = 0
        self._req = 0
        self._seq_lock = threading.Lock()
        self._last_snapshot = 0.0
        self._pending_state = None

    # -- message plumbing --------------------------------------------------

    def send(self, kind: str, payload: dict):
        with self._seq_lock:
            self._seq += 1
            msg = {"kind": kind, "seq": self._seq, "payload": payload}
        self.outbox.put(msg)

    def next_request_id(self) -> int:
        self._req += 1
        return self._req

    def await_reply(self, kind: str, request_id: int, timeout: float):
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            try:
                msg = self.replies.get(timeout=min(remaining, 0.25))
            except queue.Empty:
                if not self.client_connected.is_set():
                    return None
                continue
            if (
                isinstance(msg, dict)
                and msg.get("kind") == kind
                and isinstance(msg.get("payload"), dict)
                and msg["payload"].get("request_id") == request_id
            ):
                return msg["payload"]
            self.send(ERROR, {"message": f"unexpected message {msg.get('kind') if isinstance(msg, dict) else msg!r}"})

    def handle_client_message(self, msg: dict):
        self.replies.put(msg)

    # -- episode side -------------------------------------------------------

    def _observer(self, episode: ep.Episode, action):
        now = time.monotonic()
        payload = state_payload(episode)
        if now - self._last_snapshot >= SNAPSHOT_MIN_INTERVAL:
            self._last_snapshot = now
            self._pending_state = None
            self.send(STATE_SNAPSHOT, payload)
        else:
            self._pending_state = payload  # coalesced; flushed on the next send

    def _judge(self, episode: ep.Episode, window):
        simulated = semantics.judge_frame(
            episode.world, episode.world.category, window.candidate, episode._visible
        )
        if not self.human_judge or self.judge_timeout <= 0 or not self.client_connected.is_set():
            return simulated
        request_id = self.next_request_id()
        self.send(
            VERIFY_REQUEST,
            {
                "request_id": request_id,
                "position": list(window.candidate.position),
                "frame_index": len(window.frames),
                "suggested": simulated,
            },
        )
        reply = self.await_reply(VERIFY_REPLY, request_id, self.judge_timeout)
        if reply and reply.get("judgment") in semantics.JUDGMENTS:
            return reply["judgment"]
        return simulated

    def run(self) -> ep.EpisodeRecord:
        selector = HumanBridgeSelector(self, self.decision_timeout)
        try:
            self.record = ep.run_episode(
                self.world,
                self.config,
                selector=selector,
                judge=self._judge if self.human_judge else None,
                observer=self._observer,
            )
            if self._pending_state is not None:
                self.send(STATE_SNAPSHOT, self._pending_state)
            self.send(
                EPISODE_DONE,
                {
                    "success": self.record.success,
                    "spl": self.record.spl,
                    "steps": self.record.steps,
                    "rotations": self.record.rotations,
                    "stop_reason": self.record.stop_reason,
                    "false_stop": self.record.false_stop,
                },
            )
        except Exception as exc:  # surfaced to the client, then re-raised
            self.send(ERROR, {"message": f"episode failed: {exc}"})
            raise
        finally:
            self.outbox.put(None)  # sender sentinel
        return self.record


def create_app(world_factory, config: ep.EpisodeConfig, decision_timeout: float = 30.0,
               human_judge: bool = False) -> FastAPI:
    """Bridge service: GET /health plus the /session WebSocket."""
    app = FastAPI(title="drivenav bridge")
    app.state.records = []

    @app.get("/health")
    def health():
        return {"status": "ok", "protocol_version": PROTOCOL_VERSION}

    @app.websocket("/session")
    async def session_ws(ws: WebSocket):
        import asyncio

        await ws.accept()
        session = BridgeSession(
            world_factory(), config, decision_timeout=decision_timeout, human_judge=human_judge
        )
        session.client_connected.set()
        app.state.current_session = session
        loop = asyncio.get_event_loop()
        worker = loop.run_in_executor(None, session.run)

        async def pump_outbox():
            while True:
                try:
                    msg = session.outbox.get_nowait()
                except queue.Empty:
                    await asyncio.sleep(0.01)
                    continue
                if msg is None:
                    break
                await ws.send_json(msg)

        sender = asyncio.ensure_future(pump_outbox())
        try:
            while not worker.done():
                try:
                    data = await asyncio.wait_for(ws.receive_json(), timeout=0.05)
                except asyncio.TimeoutError:
                    continue
                except WebSocketDisconnect:
                    session.client_connected.clear()
                    break
                if isinstance(data, dict):
                    session.handle_client_message(data)
            await sender
            record = await worker
            if record is not None:
                app.state.records.append(record)
        except WebSocketDisconnect:
            session.client_connected.clear()
            await worker
        finally:
            if not sender.done():
                sender.cancel()

    return app


def serve_session(world, config: ep.EpisodeConfig, host: str = "127.0.0.1",
                  port: int = 8750, decision_timeout: float = 30.0,
                  human_judge: bool = False) -> ep.EpisodeRecord | None:
    """Serve exactly one operator session and return its episode record."""
    import uvicorn

    app = create_app(lambda: world, config, decision_timeout, human_judge)
    server = uvicorn.Server(uvicorn.Config(app, host=host, port=port, log_level="warning"))

    def stop_when_done():
        while not app.state.records and not server.should_exit:
            time.sleep(0.2)
        server.should_exit = True

    watcher = threading.Thread(target=stop_when_done, daemon=True)
    watcher.start()
    server.run()
    return app.state.records[0] if app.state.records else None


def serve(world, config: ep.EpisodeConfig, host: str = "127.0.0.1", port: int = 8750):
    """Serve sessions until interrupted (one connection at a time)."""
    import uvicorn

    app = create_app(lambda: world, config)
    uvicorn.run(app, host=host, port=port, log_level="info")
