"""Renders the policy into pixels.

Hidden objects are occluded with a patch frozen at the first frame they
were hidden, scaled (nearest-neighbor) to the box's current position, so
later changes under the box never leave the device. A solid mid-gray fill
is available as a fallback occluder. Frames are (h, w, 3) uint8 RGB numpy
arrays; all edits happen on a copy of the input.

Overlay colors are fixed: Hidden boxes get a red outline, Revealed green,
and members of a highlighted group yellow.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .detect import BBox, Detection
from .policy import PolicyView, Resolution
from .taxonomy import normalize_name as _norm

HIDDEN_OUTLINE = (255, 0, 0)
REVEALED_OUTLINE = (0, 255, 0)
HIGHLIGHT_OUTLINE = (255, 255, 0)
SOLID_FILL_COLOR = (128, 128, 128)
OUTLINE_WIDTH = 2


class EmptyAfterClampError(ValueError):
    """Box lies fully outside the frame."""


class Action(Enum):
    OCCLUDED = "Occluded"
    PASSED_THROUGH = "PassedThrough"


@dataclass(frozen=True)
class SanitizeAction:
    """What happened to one detection; warning marks an unclampable box."""

    track_id: int
    action: Action
    warning: bool = False


@dataclass(frozen=True)
class Patch:
    """Pixels captured from the clamped box region when a track was first hidden."""

    track_id: int
    captured_bbox: BBox
    pixels: np.ndarray
    captured_frame_index: int


class PatchCache:
    """At most one immutable patch per track id."""

    def __init__(self):
        self._patches: Dict[int, Patch] = {}

    def get(self, track_id: int) -> Optional[Patch]:
        return self._patches.get(track_id)

    def put(self, patch: Patch):
        self._patches.setdefault(patch.track_id, patch)

    def __len__(self) -> int:
        return len(self._patches)

    def __contains__(self, track_id: int) -> bool:
        return track_id in self._patches


def clamp(bbox: BBox, width: int, height: int) -> BBox:
    """Intersect a box with the frame rectangle."""
    x0 = max(bbox.x, 0)
    y0 = max(bbox.y, 0)
    x1 = min(bbox.x + bbox.w, width)
    y1 = min(bbox.y + bbox.h, height)
    if x1 <= x0 or y1 <= y0:
        raise EmptyAfterClampError(f"box {bbox} outside {width}x{height} frame")
    return BBox(x0, y0, x1 - x0, y1 - y0)


def capture_patch(frame: np.ndarray, bbox: BBox, track_id: int, frame_index: int) -> Patch:
    """Byte-exact copy of the clamped box region of the frame."""
    h, w = frame.shape[:2]
    region = clamp(bbox, w, h)
    pixels = frame[region.y : region.y + region.h, region.x : region.x + region.w].copy()
    pixels.setflags(write=False)
    return Patch(track_id, region, pixels, frame_index)


def scale_nearest(pixels: np.ndarray, width: int, height: int) -> np.ndarray:
    """Nearest-neighbor resample with integer index math (platform-exact)."""
    src_h, src_w = pixels.shape[:2]
    rows = (np.arange(height) * src_h) // height
    cols = (np.arange(width) * src_w) // width
    return pixels[rows][:, cols]


def sanitize_frame(
    frame: np.ndarray,
    detections: Sequence[Detection],
    policy_view: PolicyView,
    cache: PatchCache,
    solid_fill: bool = False,
) -> Tuple[np.ndarray, PatchCache, List[SanitizeAction]]:
    """Occlude every detection the policy resolves to Hidden.

    A track's first hidden box captures its patch from the current frame;
    from then on the cached patch is drawn scaled to the box's current
    clamped position. Pixels outside hidden boxes are untouched and the
    input frame is never modified.
    """
    height, width = frame.shape[:2]
    out = frame.copy()
    actions: List[SanitizeAction] = []
    for det in detections:
        if det.track_id is None:
            raise ValueError(f"detection without track id: {det}")
        if policy_view.resolve(det.class_name) is not Resolution.HIDDEN:
            actions.append(SanitizeAction(det.track_id, Action.PASSED_THROUGH))
            continue
        try:
            box = clamp(det.bbox, width, height)
        except EmptyAfterClampError:
            actions.append(SanitizeAction(det.track_id, Action.PASSED_THROUGH, warning=True))
            continue
        target = out[box.y : box.y + box.h, box.x : box.x + box.w]
        if solid_fill:
            target[:] = SOLID_FILL_COLOR
        else:
            patch = cache.get(det.track_id)
            if patch is None:
                patch = capture_patch(frame, det.bbox, det.track_id, det.frame_index)
                cache.put(patch)
            target[:] = scale_nearest(patch.pixels, box.w, box.h)
        actions.append(SanitizeAction(det.track_id, Action.OCCLUDED))
    return out, cache, actions


def _draw_outline(frame: np.ndarray, box: BBox, color: Tuple[int, int, int]):
    t = OUTLINE_WIDTH
    x0, y0 = box.x, box.y
    x1, y1 = box.x + box.w, box.y + box.h
    frame[y0 : min(y0 + t, y1), x0:x1] = color
    frame[max(y1 - t, y0) : y1, x0:x1] = color
    frame[y0:y1, x0 : min(x0 + t, x1)] = color
    frame[y0:y1, max(x1 - t, x0) : x1] = color


def render_overlay(
    frame: np.ndarray,
    detections: Sequence[Detection],
    policy_view: PolicyView,
    cache: PatchCache,
    selection: Optional[Tuple[int, Iterable[str]]] = None,
    solid_fill: bool = False,
) -> np.ndarray:
    """Sanitized frame plus 2-px outlines on every sensitive detection.

    `selection` is (track_id, classes of the highlighted group); members
    of that group get the highlight color instead of their state color.
    """
    out, _, _ = sanitize_frame(frame, detections, policy_view, cache, solid_fill=solid_fill)
    highlighted = frozenset(_norm(c) for c in selection[1]) if selection else frozenset()
    height, width = out.shape[:2]
    for det in detections:
        resolution = policy_view.resolve(det.class_name)
        if resolution is Resolution.NOT_SENSITIVE:
            continue
        try:
            box = clamp(det.bbox, width, height)
        except EmptyAfterClampError:
            continue
        if _norm(det.class_name) in highlighted:
            color = HIGHLIGHT_OUTLINE
        elif resolution is Resolution.HIDDEN:
            color = HIDDEN_OUTLINE
        else:
            color = REVEALED_OUTLINE
        _draw_outline(out, box, color)
    return out
