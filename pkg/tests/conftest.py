"""Shared fixtures: the bundled taxonomy, tiny frame sequences, and
JSON Lines detection fixtures written to temp dirs."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from visguardian import default_taxonomy
from visguardian.pipeline import save_frame


@pytest.fixture(scope="session")
def tax():
    return default_taxonomy()


def make_frames(count: int, width: int = 64, height: int = 48, seed: int = 7):
    """Deterministic random RGB frames."""
    rng = np.random.default_rng(seed)
    return [
        rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
        for _ in range(count)
    ]


def write_frame_dir(directory: Path, frames) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        save_frame(directory / f"{i:06d}.png", frame)
    return directory


def write_fixture(path: Path, frames_detections) -> Path:
    """frames_detections: {frame_index: [(class, [x,y,w,h], conf) or dict]}"""
    lines = []
    for frame_index in sorted(frames_detections):
        dets = []
        for det in frames_detections[frame_index]:
            if isinstance(det, dict):
                dets.append(det)
            else:
                cls, bbox, conf = det
                dets.append({"class": cls, "bbox": list(bbox), "conf": conf})
        lines.append(json.dumps({"frame": frame_index, "detections": dets}))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def scene_dir(tmp_path):
    """A 10-frame scene with a person and a book box, person box drifting."""
    frames = make_frames(10)
    frame_dir = write_frame_dir(tmp_path / "frames", frames)
    dets = {
        i: [
            ("person", [4 + i, 6, 18, 30], 0.93),
            ("book", [40, 24, 14, 12], 0.81),
        ]
        for i in range(10)
    }
    fixture = write_fixture(tmp_path / "detections.jsonl", dets)
    return frame_dir, fixture, frames
