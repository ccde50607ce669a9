#!/usr/bin/env python3
"""Generate a small demo scene: drifting colored objects over a noisy
background, a matching detection fixture, an interaction script, and a
comparison scenario."""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from visguardian.pipeline import save_frame

WIDTH, HEIGHT, FRAMES = 320, 240, 40

OBJECTS = [
    # (class, base box, per-frame dx, fill color)
    ("person", [30, 40, 60, 120], 2, (200, 160, 120)),
    ("laptop", [160, 120, 90, 60], 0, (40, 40, 60)),
    ("book", [150, 30, 40, 30], 1, (180, 30, 30)),
    ("medicine", [260, 180, 30, 30], 0, (240, 240, 240)),
]


def main(out_root: Path):
    rng = np.random.default_rng(2024)
    frame_dir = out_root / "frames"
    frame_dir.mkdir(parents=True, exist_ok=True)
    background = rng.integers(40, 90, size=(HEIGHT, WIDTH, 3), dtype=np.uint8)
    fixture_lines = []
    for i in range(FRAMES):
        frame = background.copy()
        noise = rng.integers(0, 20, size=frame.shape, dtype=np.uint8)
        frame = np.clip(frame.astype(np.int16) + noise, 0, 255).astype(np.uint8)
        dets = []
        for track, (cls, (x, y, w, h), dx, color) in enumerate(OBJECTS, start=1):
            bx = min(max(0, x + dx * i), WIDTH - w)
            frame[y : y + h, bx : bx + w] = color
            frame[y : y + 6, bx : bx + 6] = (255 - i * 4, i * 5 % 255, 90)  # visible motion
            dets.append({"class": cls, "bbox": [bx, y, w, h], "conf": 0.9, "track": track})
        save_frame(frame_dir / f"{i:06d}.png", frame)
        fixture_lines.append(json.dumps({"frame": i, "detections": dets}))
    (out_root / "detections.jsonl").write_text("\n".join(fixture_lines) + "\n")
    (out_root / "script.json").write_text(
        json.dumps(
            [
                {"frame": 10, "kind": "ToggleClass", "class": "book"},
                {"frame": 25, "kind": "ApplyGroup", "anchor": "laptop computer",
                 "dimension": "Category", "action": "Reveal"},
            ],
            indent=2,
        )
        + "\n"
    )
    office = ["badge", "book", "calendar", "checkbook", "file cabinet", "id card", "signed document"]
    (out_root / "scenario.json").write_text(
        json.dumps(
            {"scene": office, "start": "default", "target": {c: "Revealed" for c in office}},
            indent=2,
        )
        + "\n"
    )
    print(f"demo written to {out_root}/ ({FRAMES} frames, 4 objects)")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo"))
