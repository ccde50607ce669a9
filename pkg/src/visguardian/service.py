"""HTTP/WebSocket service exposing the sanitized stream, the policy, group
queries, and events to UIs and scripted clients.

One background task owns the pipeline state (tracker, patch cache, policy
snapshots); request handlers apply interactions through the store's
serialized mutation path and read snapshots. WebSocket fan-out uses
bounded per-client frame buffers: the slowest client loses frames (counted
in /metrics), never events.
"""

from __future__ import annotations

import asyncio
import io
import json
import time
from collections import deque
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from PIL import Image

from .detect import FixtureDetector, IouTracker, load_fixture
from .pipeline import ConfigError, DirectoryFrameSource, RunReport, _distribution
from .policy import (
    InvalidLevelError,
    InteractionEvent,
    Mode,
    ModeMismatchError,
    PolicyStore,
    new_store,
    query_groups,
)
from .sanitize import PatchCache, render_overlay
from .taxonomy import (
    NotFoundError,
    Taxonomy,
    ValidationError,
    default_taxonomy,
    load_taxonomy,
)

MAX_PENDING_FRAMES = 4


@dataclass
class ServiceConfig:
    frames_dir: Path
    detections_path: Path
    taxonomy_path: Optional[Path] = None
    app_id: str = "default-app"
    mode: Mode = Mode.VISGUARDIAN
    fps: float = 10.0
    solid_fill: bool = False
    loop_source: bool = True
    policy_in: Optional[Path] = None
    policy_out: Optional[Path] = None


class _Client:
    def __init__(self):
        self.queue: asyncio.Queue = asyncio.Queue()
        self.pending_frames = 0
        self.dropped_frames = 0


def _encode_png(frame: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(frame, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


class StreamService:
    """Owns the frame loop and the single per-process policy store."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        if config.taxonomy_path is not None:
            self.taxonomy: Taxonomy = load_taxonomy(config.taxonomy_path)
        else:
            self.taxonomy = default_taxonomy()
        source = DirectoryFrameSource(config.frames_dir)
        if len(source) == 0:
            raise ConfigError(f"no frames in {config.frames_dir}")
        self.frames = [frame for _, frame in source.frames()]
        self.detector: FixtureDetector = load_fixture(config.detections_path, self.taxonomy)
        self.store: PolicyStore = new_store(config.app_id, self.taxonomy, config.mode)
        if config.policy_in is not None:
            self.store.load_states(json.loads(Path(config.policy_in).read_text("utf-8")))
        self.tracker = IouTracker()
        self.cache = PatchCache()
        self.clients: List[_Client] = []
        self.event_sequence = 0
        self.frames_processed = 0
        self.new_class_events = 0
        self.interactions = 0
        self.audit_log: List[dict] = []
        self.stage_samples: Dict[str, deque] = {
            stage: deque(maxlen=600) for stage in ("detect", "policy", "sanitize", "encode", "total")
        }
        self._started = time.perf_counter()
        self._task: Optional[asyncio.Task] = None

    # -- events ------------------------------------------------------------

    def emit_event(self, kind: str, payload) -> dict:
        self.event_sequence += 1
        message = {"kind": kind, "payload": payload, "sequence": self.event_sequence}
        for client in self.clients:
            client.queue.put_nowait(("event", message))
        return message

    def _broadcast_frame(self, png: bytes, meta: dict):
        for client in self.clients:
            if client.pending_frames >= MAX_PENDING_FRAMES:
                client.dropped_frames += 1
                continue
            client.pending_frames += 1
            client.queue.put_nowait(("frame", (png, meta)))

    # -- pipeline ------------------------------------------------------------

    def process_one_frame(self) -> dict:
        """Process the next frame and broadcast it; returns the frame meta."""
        index = self.frames_processed
        source_index = index % len(self.frames)
        frame = self.frames[source_index]
        t0 = time.perf_counter()
        detections = self.tracker.update(self.detector.detect(source_index))
        t1 = time.perf_counter()
        for event in self.store.observe(
            (d.class_name for d in detections if d.sensitive), index
        ):
            self.new_class_events += 1
            self.emit_event("NewClass", event.class_name)
        view = self.store.snapshot()
        t2 = time.perf_counter()
        overlay = render_overlay(
            frame, detections, view, self.cache, solid_fill=self.config.solid_fill
        )
        t3 = time.perf_counter()
        png = _encode_png(overlay)
        t4 = time.perf_counter()
        meta = {
            "frame": index,
            "detections": [
                {
                    "track": d.track_id,
                    "class": d.class_name,
                    "bbox": d.bbox.as_list(),
                    "state": view.resolve(d.class_name).value,
                }
                for d in detections
            ],
            "policy_digest": view.digest,
        }
        self._broadcast_frame(png, meta)
        self.frames_processed += 1
        for stage, value in (
            ("detect", t1 - t0),
            ("policy", t2 - t1),
            ("sanitize", t3 - t2),
            ("encode", t4 - t3),
            ("total", t4 - t0),
        ):
            self.stage_samples[stage].append(value * 1000.0)
        return meta

    async def _frame_loop(self):
        interval = 1.0 / self.config.fps if self.config.fps > 0 else 0.0
        while True:
            if not self.config.loop_source and self.frames_processed >= len(self.frames):
                break
            started = time.perf_counter()
            self.process_one_frame()
            elapsed = time.perf_counter() - started
            await asyncio.sleep(max(0.0, interval - elapsed))

    def start(self):
        self._task = asyncio.get_event_loop().create_task(self._frame_loop())

    async def stop(self):
        if self._task is not None:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass
        if self.config.policy_out is not None:
            Path(self.config.policy_out).write_text(
                json.dumps(self.store.to_json(), indent=2, sort_keys=True) + "\n", "utf-8"
            )

    # -- views ------------------------------------------------------------

    def apply_interaction(self, event: InteractionEvent) -> dict:
        record = self.store.apply_interaction(event)
        self.interactions += 1
        data = record.to_json()
        self.audit_log.append(data)
        self.emit_event("PolicyChanged", data)
        return data

    def policy_json(self) -> dict:
        snapshot = self.store.snapshot()
        return {
            "app_id": self.store.app_id,
            "mode": self.store.mode.value,
            "digest": snapshot.digest,
            "states": {c: s.value for c, s in sorted(snapshot.states.items())},
            "slider_level": self.store.slider_level,
        }

    def metrics_report(self) -> RunReport:
        elapsed = time.perf_counter() - self._started
        return RunReport(
            frames=self.frames_processed,
            new_class_events=self.new_class_events,
            interactions=self.interactions,
            fps=self.frames_processed / elapsed if elapsed > 0 else 0.0,
            audit_digest=self.store.digest,
            stages={
                stage: _distribution(list(samples))
                for stage, samples in self.stage_samples.items()
            },
        )

    @property
    def dropped_frames(self) -> int:
        return sum(c.dropped_frames for c in self.clients)


def create_app(config: ServiceConfig) -> FastAPI:
    service = StreamService(config)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        service.start()
        try:
            yield
        finally:
            await service.stop()

    app = FastAPI(title="visguardian", lifespan=lifespan)
    app.state.service = service

    @app.get("/taxonomy")
    def get_taxonomy():
        return service.taxonomy.to_document()

    @app.get("/policy")
    def get_policy():
        return service.policy_json()

    @app.get("/groups")
    def get_groups(anchor: str):
        try:
            return query_groups(service.taxonomy, anchor).to_json()
        except NotFoundError:
            return JSONResponse({"error": f"unknown anchor {anchor!r}"}, status_code=404)

    @app.post("/interactions")
    async def post_interaction(request: Request):
        try:
            raw = await request.json()
        except Exception:
            return JSONResponse({"error": "body must be JSON"}, status_code=400)
        try:
            event = InteractionEvent.from_json(raw)
            return service.apply_interaction(event)
        except ModeMismatchError as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        except NotFoundError as exc:
            return JSONResponse({"error": f"unknown class {exc}"}, status_code=404)
        except (ValidationError, InvalidLevelError, ValueError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)

    @app.post("/apps/{app_id}/request")
    def post_app_request(app_id: str):
        message = service.emit_event("PromptRequested", app_id)
        return {"status": "ok", "sequence": message["sequence"]}

    @app.get("/metrics")
    def get_metrics():
        report = service.metrics_report().to_json()
        report["dropped_frames"] = service.dropped_frames
        report["clients"] = len(service.clients)
        return report

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        client = _Client()
        service.clients.append(client)
        try:
            while True:
                kind, payload = await client.queue.get()
                if kind == "frame":
                    png, meta = payload
                    await ws.send_bytes(png)
                    await ws.send_text(json.dumps(meta))
                    client.pending_frames -= 1
                else:
                    await ws.send_text(json.dumps(payload))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            if client in service.clients:
                service.clients.remove(client)

    return app


def serve(config: ServiceConfig, host: str = "127.0.0.1", port: int = 8710):
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")
