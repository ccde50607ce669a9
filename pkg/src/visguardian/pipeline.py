"""Per-frame orchestration: detect -> canonicalize -> track -> observe ->
snapshot -> sanitize -> sinks, with stage timings, an append-only audit
log, and a run report.

Interaction scripts are quantized to frame boundaries: an event scheduled
for frame N is applied before frame N is processed, so replays are
deterministic and every output frame is produced from exactly one policy
snapshot (its digest is recorded per frame).
"""

from __future__ import annotations

import csv
import json
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image

from .detect import BBox, Detection, FixtureDetector, IouTracker, load_fixture
from .policy import (
    AuditRecord,
    InteractionEvent,
    Mode,
    PolicyStore,
    new_store,
)
from .sanitize import PatchCache, sanitize_frame
from .taxonomy import Taxonomy, default_taxonomy, load_taxonomy

STAGES = ("detect", "policy", "sanitize", "encode", "total")


class ConfigError(ValueError):
    """Bad paths, script, or flags; reported before any frame is processed."""


class SinkError(RuntimeError):
    """An output sink failed mid-run."""


def load_frame(path: Union[str, Path]) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def save_frame(path: Union[str, Path], frame: np.ndarray):
    Image.fromarray(frame, mode="RGB").save(path, format="PNG")


class DirectoryFrameSource:
    """PNG sequence with zero-padded numeric filenames, ordered numerically."""

    def __init__(self, directory: Union[str, Path]):
        directory = Path(directory)
        if not directory.is_dir():
            raise ConfigError(f"frame directory not found: {directory}")
        entries = []
        for path in directory.iterdir():
            if path.suffix.lower() == ".png" and path.stem.isdigit():
                entries.append((int(path.stem), path))
        if not entries:
            self._paths: List[Path] = []
        else:
            self._paths = [path for _, path in sorted(entries)]

    def __len__(self) -> int:
        return len(self._paths)

    def frames(self) -> Iterator[Tuple[int, np.ndarray]]:
        for index, path in enumerate(self._paths):
            yield index, load_frame(path)


class ArrayFrameSource:
    """In-memory frames, cycled if more frames are requested than supplied."""

    def __init__(self, frames: Sequence[np.ndarray], count: Optional[int] = None):
        self._frames = list(frames)
        self._count = count if count is not None else len(self._frames)

    def __len__(self) -> int:
        return self._count

    def frames(self) -> Iterator[Tuple[int, np.ndarray]]:
        for index in range(self._count):
            yield index, self._frames[index % len(self._frames)]


@dataclass(frozen=True)
class ScriptedEvent:
    """An interaction applied before the given frame is processed."""

    frame: int
    event: InteractionEvent


def parse_script(raw: Union[str, list]) -> List[ScriptedEvent]:
    """Script file: JSON array of {frame, ...event fields}."""
    if isinstance(raw, str):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"script is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ConfigError("script must be a JSON array")
    out = []
    for item in raw:
        try:
            frame = int(item["frame"])
            event = InteractionEvent.from_json({**item, "timestamp": frame})
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad script entry {item!r}: {exc}") from exc
        out.append(ScriptedEvent(frame, event))
    return sorted(out, key=lambda s: s.frame)


def validate_script(script: Sequence[ScriptedEvent], taxonomy: Taxonomy, mode: Mode):
    """Dry-run the script against a scratch store; raises ConfigError."""
    scratch = new_store("script-validation", taxonomy, mode)
    for item in script:
        try:
            scratch.apply_interaction(item.event)
        except Exception as exc:
            raise ConfigError(f"script event at frame {item.frame} invalid: {exc}") from exc


@dataclass
class PipelineConfig:
    frames_dir: Optional[Path] = None
    detections_path: Optional[Path] = None
    taxonomy_path: Optional[Path] = None
    out_dir: Optional[Path] = None
    app_id: str = "default-app"
    mode: Mode = Mode.VISGUARDIAN
    solid_fill: bool = False
    fps_cap: Optional[float] = None
    write_figure: bool = True

    def __post_init__(self):
        if self.fps_cap is not None and self.fps_cap <= 0:
            raise ConfigError(f"fps_cap must be > 0, got {self.fps_cap}")


@dataclass
class RunReport:
    """Summary of one pipeline run."""

    frames: int
    new_class_events: int
    interactions: int
    fps: float
    audit_digest: str
    stages: Dict[str, Dict[str, float]]
    partial: bool = False
    error: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "frames": self.frames,
            "new_class_events": self.new_class_events,
            "interactions": self.interactions,
            "fps": round(self.fps, 3),
            "audit_digest": self.audit_digest,
            "stages": self.stages,
            "partial": self.partial,
            "error": self.error,
        }

    def summary_lines(self) -> List[str]:
        lines = [
            f"frames processed : {self.frames}",
            f"new-class events : {self.new_class_events}",
            f"interactions     : {self.interactions}",
            f"achieved FPS     : {self.fps:.2f}",
            f"audit digest     : {self.audit_digest}",
        ]
        for stage in STAGES:
            stats = self.stages.get(stage)
            if stats:
                lines.append(
                    f"{stage:<9} ms     : min {stats['min']:.3f}  median {stats['median']:.3f}"
                    f"  p95 {stats['p95']:.3f}  max {stats['max']:.3f}"
                )
        if self.partial:
            lines.append(f"PARTIAL RUN: {self.error}")
        return lines


def _distribution(samples: Sequence[float]) -> Dict[str, float]:
    if not samples:
        return {"min": 0.0, "median": 0.0, "p95": 0.0, "max": 0.0}
    data = sorted(samples)
    return {
        "min": round(data[0], 4),
        "median": round(statistics.median(data), 4),
        "p95": round(float(np.percentile(data, 95)), 4),
        "max": round(data[-1], 4),
    }


class _FrameMetrics:
    def __init__(self):
        self.rows: List[dict] = []

    def add(self, frame: int, digest: str, timings: Dict[str, float]):
        row = {"frame": frame, "digest": digest}
        row.update({f"{stage}_ms": round(timings[stage], 4) for stage in STAGES})
        self.rows.append(row)

    def stage_samples(self, stage: str) -> List[float]:
        return [row[f"{stage}_ms"] for row in self.rows]


def _resolve_taxonomy(config: PipelineConfig) -> Taxonomy:
    if config.taxonomy_path is not None:
        return load_taxonomy(config.taxonomy_path)
    return default_taxonomy()


def load_pipeline_inputs(config: PipelineConfig) -> Tuple[Taxonomy, DirectoryFrameSource, FixtureDetector]:
    """Validate and load everything needed before frame 0."""
    try:
        taxonomy = _resolve_taxonomy(config)
    except Exception as exc:
        raise ConfigError(str(exc)) from exc
    if config.frames_dir is None or config.detections_path is None:
        raise ConfigError("frames directory and detections fixture are required")
    source = DirectoryFrameSource(config.frames_dir)
    if not Path(config.detections_path).is_file():
        raise ConfigError(f"detections fixture not found: {config.detections_path}")
    try:
        detector = load_fixture(config.detections_path, taxonomy)
    except Exception as exc:
        raise ConfigError(str(exc)) from exc
    return taxonomy, source, detector


def replay(
    config: PipelineConfig,
    script: Sequence[ScriptedEvent] = (),
    source=None,
    detector: Optional[FixtureDetector] = None,
    taxonomy: Optional[Taxonomy] = None,
    store: Optional[PolicyStore] = None,
) -> RunReport:
    """Run the pipeline, applying scripted interactions at frame boundaries.

    Identical inputs produce byte-identical output frames and identical
    audit digests. Raises ConfigError before frame 0 for invalid input,
    SinkError (after writing a partial report) when an output fails.
    """
    if taxonomy is None or source is None or detector is None:
        taxonomy, source, detector = load_pipeline_inputs(config)
    script = sorted(script, key=lambda s: s.frame)
    validate_script(script, taxonomy, config.mode)

    out_dir = Path(config.out_dir) if config.out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    audit_path = out_dir / "audit.jsonl" if out_dir else None
    if audit_path is not None and audit_path.exists():
        audit_path.unlink()

    store = store if store is not None else new_store(config.app_id, taxonomy, config.mode)
    tracker = IouTracker()
    cache = PatchCache()
    metrics = _FrameMetrics()
    new_class_count = 0
    interaction_count = 0
    script_pos = 0
    frames_done = 0
    partial_error: Optional[str] = None

    wall_start = time.perf_counter()
    try:
        for frame_index, frame in source.frames():
            while script_pos < len(script) and script[script_pos].frame <= frame_index:
                record = store.apply_interaction(script[script_pos].event)
                interaction_count += 1
                if audit_path is not None:
                    _append_audit(audit_path, record)
                script_pos += 1

            t0 = time.perf_counter()
            detections = tracker.update(detector.detect(frame_index))
            t1 = time.perf_counter()
            new_class_count += len(
                store.observe(
                    (d.class_name for d in detections if d.sensitive), frame_index
                )
            )
            view = store.snapshot()
            for det in detections:
                view.resolve(det.class_name)
            t2 = time.perf_counter()
            sanitized, _, _ = sanitize_frame(
                frame, detections, view, cache, solid_fill=config.solid_fill
            )
            t3 = time.perf_counter()
            if out_dir is not None:
                try:
                    save_frame(out_dir / f"{frame_index:06d}.png", sanitized)
                except OSError as exc:
                    raise SinkError(f"frame sink failed at {frame_index}: {exc}") from exc
            t4 = time.perf_counter()

            metrics.add(
                frame_index,
                view.digest,
                {
                    "detect": (t1 - t0) * 1000.0,
                    "policy": (t2 - t1) * 1000.0,
                    "sanitize": (t3 - t2) * 1000.0,
                    "encode": (t4 - t3) * 1000.0,
                    "total": (t4 - t0) * 1000.0,
                },
            )
            frames_done += 1
            if config.fps_cap:
                budget = 1.0 / config.fps_cap
                elapsed = time.perf_counter() - t0
                if elapsed < budget:
                    time.sleep(budget - elapsed)
    except SinkError as exc:
        partial_error = str(exc)
    wall_elapsed = time.perf_counter() - wall_start

    # Trailing script events (after the last frame) still apply and audit.
    if partial_error is None:
        while script_pos < len(script):
            record = store.apply_interaction(script[script_pos].event)
            interaction_count += 1
            if audit_path is not None:
                _append_audit(audit_path, record)
            script_pos += 1

    report = RunReport(
        frames=frames_done,
        new_class_events=new_class_count,
        interactions=interaction_count,
        fps=frames_done / wall_elapsed if wall_elapsed > 0 else 0.0,
        audit_digest=store.digest,
        stages={stage: _distribution(metrics.stage_samples(stage)) for stage in STAGES},
        partial=partial_error is not None,
        error=partial_error,
    )
    if out_dir is not None:
        _write_report(out_dir, report, metrics, config.write_figure)
    if partial_error is not None:
        raise SinkError(partial_error)
    return report


def run(config: PipelineConfig) -> RunReport:
    """Run with no interactions: the pure default-deny pipeline."""
    return replay(config, script=())


def _append_audit(path: Path, record: AuditRecord):
    try:
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")
    except OSError as exc:
        raise SinkError(f"audit sink failed: {exc}") from exc


def _write_report(out_dir: Path, report: RunReport, metrics: _FrameMetrics, figure: bool):
    try:
        (out_dir / "metrics.json").write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        with (out_dir / "frame_metrics.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["frame", "digest"] + [f"{s}_ms" for s in STAGES]
            )
            writer.writeheader()
            writer.writerows(metrics.rows)
    except OSError as exc:
        raise SinkError(f"metrics sink failed: {exc}") from exc
    if figure and metrics.rows:
        from .figures import render_latency_figure

        render_latency_figure(metrics.rows, out_dir / "latency.png")


def bench_inputs(
    width: int = 1280,
    height: int = 720,
    boxes: int = 32,
    frames: int = 120,
    seed: int = 0,
    taxonomy: Optional[Taxonomy] = None,
) -> Tuple[Taxonomy, ArrayFrameSource, FixtureDetector]:
    """Synthetic benchmark workload: noisy frames and jittering boxes."""
    taxonomy = taxonomy or default_taxonomy()
    rng = np.random.default_rng(seed)
    unique = [
        rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8) for _ in range(8)
    ]
    source = ArrayFrameSource(unique, count=frames)
    classes = taxonomy.classes
    per_frame: Dict[int, List[Detection]] = {}
    cols = max(1, int(np.ceil(np.sqrt(boxes))))
    cell_w = max(2, width // cols)
    cell_h = max(2, height // cols)
    for frame_index in range(frames):
        dets = []
        for b in range(boxes):
            cx = (b % cols) * cell_w
            cy = (b // cols) * cell_h
            jitter = int(rng.integers(0, 5))
            x = min(max(0, cx + jitter), width - 2)
            y = min(max(0, cy + jitter), height - 2)
            w = max(1, min(cell_w - 1, width - x))
            h = max(1, min(cell_h - 1, height - y))
            dets.append(
                Detection(
                    frame_index=frame_index,
                    class_name=classes[b % len(classes)],
                    bbox=BBox(x, y, w, h),
                    confidence=0.9,
                    track_id=None,
                    sensitive=True,
                )
            )
        per_frame[frame_index] = dets
    return taxonomy, source, FixtureDetector(per_frame)


def run_bench(
    width: int = 1280,
    height: int = 720,
    boxes: int = 32,
    frames: int = 120,
    seed: int = 0,
    mode: Mode = Mode.VISGUARDIAN,
) -> RunReport:
    """Uncapped throughput benchmark; processing only, no frame sink."""
    taxonomy, source, detector = bench_inputs(width, height, boxes, frames, seed)
    config = PipelineConfig(mode=mode, write_figure=False)
    return replay(config, script=(), source=source, detector=detector, taxonomy=taxonomy)
