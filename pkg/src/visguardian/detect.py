"""Per-frame detections from a JSON Lines fixture file, plus a small greedy
IoU tracker that gives detections stable track ids across frames.

Fixture format, one object per frame:
    {"frame": 0, "detections": [{"class": "person", "bbox": [x, y, w, h],
                                 "conf": 0.9, "track": 3}]}
`track` is optional; when present on every detection in the file the
tracker is bypassed. Frames without a line yield zero detections.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .taxonomy import ParseError, Taxonomy

IOU_MATCH_THRESHOLD = 0.3


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box, top-left corner plus extents, in pixels.

    Boxes may extend past the frame edge; they are clamped at render time.
    """

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ValueError(f"bbox origin must be non-negative, got ({self.x}, {self.y})")
        if self.w < 1 or self.h < 1:
            raise ValueError(f"bbox extents must be >= 1, got ({self.w}, {self.h})")

    @property
    def area(self) -> int:
        return self.w * self.h

    def as_list(self) -> List[int]:
        return [self.x, self.y, self.w, self.h]


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes; 0.0 when disjoint."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class Detection:
    """One detected object instance in one frame.

    `class_name` is canonical when `sensitive` is True, otherwise the raw
    detector label is kept verbatim (the Unknown marker).
    """

    frame_index: int
    class_name: str
    bbox: BBox
    confidence: float
    track_id: Optional[int] = None
    sensitive: bool = True

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


def assign_tracks(
    previous: List[Detection], current: List[Detection], next_id: int
) -> Tuple[List[Detection], int]:
    """Greedy same-class matching by descending IoU.

    Matches with IoU >= 0.3 inherit the previous track id; each previous
    track matches at most one current detection. Unmatched detections get
    fresh ids counting up from `next_id`, in input order. Returns the
    assigned detections and the next fresh id.
    """
    for det in previous:
        if det.track_id is None:
            raise ValueError("previous detections must all have track ids")
    pairs = []
    for pi, prev in enumerate(previous):
        for ci, cur in enumerate(current):
            if prev.class_name != cur.class_name:
                continue
            overlap = iou(prev.bbox, cur.bbox)
            if overlap >= IOU_MATCH_THRESHOLD:
                # Sort key makes ties deterministic: best overlap first,
                # then oldest track, then input order.
                pairs.append((-overlap, prev.track_id, ci, pi))
    pairs.sort()
    assigned: Dict[int, int] = {}
    used_prev = set()
    for _, track_id, ci, pi in pairs:
        if ci in assigned or pi in used_prev:
            continue
        assigned[ci] = track_id
        used_prev.add(pi)
    result = []
    for ci, det in enumerate(current):
        if ci in assigned:
            result.append(replace(det, track_id=assigned[ci]))
        else:
            result.append(replace(det, track_id=next_id))
            next_id += 1
    return result, next_id


class IouTracker:
    """Stateful wrapper around assign_tracks; ids are never reused, so a
    cache keyed by track id can outlive the track."""

    def __init__(self):
        self._previous: List[Detection] = []
        self._next_id = 1

    def update(self, detections: List[Detection]) -> List[Detection]:
        if all(d.track_id is not None for d in detections):
            # Fixture already carries track ids; keep them authoritative.
            self._previous = list(detections)
            if detections:
                self._next_id = max(self._next_id, max(d.track_id for d in detections) + 1)
            return list(detections)
        assigned, self._next_id = assign_tracks(self._previous, detections, self._next_id)
        self._previous = assigned
        return assigned

    def reset(self):
        self._previous = []
        self._next_id = 1


class FixtureDetector:
    """Deterministic detector replaying recorded detections per frame.

    Immutable after load; classes are canonicalized through the taxonomy
    at load time, unmapped labels are kept verbatim and flagged.
    """

    def __init__(self, frames: Dict[int, List[Detection]]):
        self._frames = frames

    def detect(self, frame_index: int) -> List[Detection]:
        return list(self._frames.get(frame_index, []))

    @property
    def frame_indices(self) -> List[int]:
        return sorted(self._frames)

    @property
    def has_full_tracks(self) -> bool:
        """True when every recorded detection carries a track id."""
        return all(
            d.track_id is not None for dets in self._frames.values() for d in dets
        )


def _parse_fixture_detection(raw: dict, frame_index: int, tax: Taxonomy, line_no: int) -> Detection:
    try:
        label = raw["class"]
        x, y, w, h = raw["bbox"]
        conf = raw["conf"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"line {line_no}: bad detection object: {exc}") from exc
    canonical = tax.canonicalize(str(label))
    try:
        bbox = BBox(int(x), int(y), int(w), int(h))
        det = Detection(
            frame_index=frame_index,
            class_name=canonical if canonical else str(label),
            bbox=bbox,
            confidence=float(conf),
            track_id=int(raw["track"]) if "track" in raw else None,
            sensitive=canonical is not None,
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"line {line_no}: {exc}") from exc
    return det


def load_fixture(path: Union[str, Path], tax: Taxonomy) -> FixtureDetector:
    """Load a JSON Lines detection fixture; missing frames mean no detections."""
    frames: Dict[int, List[Detection]] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read fixture {path}: {exc}") from exc
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            frame_index = int(record["frame"])
            raw_dets = record.get("detections", [])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"line {line_no}: {exc}") from exc
        if frame_index < 0:
            raise ParseError(f"line {line_no}: negative frame index {frame_index}")
        dets = [
            _parse_fixture_detection(raw, frame_index, tax, line_no) for raw in raw_dets
        ]
        frames.setdefault(frame_index, []).extend(dets)
    return FixtureDetector(frames)
