import json
from pathlib import Path

import numpy as np
import pytest

from conftest import make_frames, write_fixture, write_frame_dir
from visguardian.pipeline import (
    ConfigError,
    PipelineConfig,
    SinkError,
    load_frame,
    parse_script,
    replay,
    run,
    run_bench,
)
from visguardian.policy import (
    InteractionEvent,
    Mode,
    VisibilityState,
    compute_digest,
    new_store,
    slider_hidden_classes,
)
from visguardian.taxonomy import Dimension

H = VisibilityState.HIDDEN
R = VisibilityState.REVEALED


# -- independent post-hoc scanner --------------------------------------------
# Re-derives the expected sink frames from raw frames + fixture + script with
# its own tiny policy interpreter and pure-Python patch scaling. Assumes the
# fixture uses explicit track ids and non-overlapping boxes.


def _naive_apply(states, event, tax, slider):
    if event.kind.value == "ToggleClass":
        c = event.class_name
        states[c] = R if states[c] is H else H
    elif event.kind.value == "SetClass":
        states[event.class_name] = event.state
    elif event.kind.value == "ApplyGroup":
        anchor_entry = tax.lookup(event.anchor)
        for c in list(states):
            entry = tax.lookup(c)
            same = {
                Dimension.SENSITIVITY: entry.risk == anchor_entry.risk,
                Dimension.CATEGORY: entry.type_group == anchor_entry.type_group,
                Dimension.SPATIAL: entry.space == anchor_entry.space,
            }[event.dimension]
            if same:
                states[c] = event.action
    elif event.kind.value == "SetSlider":
        slider[0] = event.level
    return states


def _naive_clamp(bbox, width, height):
    x, y, w, h = bbox
    x0, y0 = max(x, 0), max(y, 0)
    x1, y1 = min(x + w, width), min(y + h, height)
    return (x0, y0, x1 - x0, y1 - y0)


def _naive_scale(patch, w, h):
    ph, pw = len(patch), len(patch[0])
    return [[patch[r * ph // h][c * pw // w] for c in range(w)] for r in range(h)]


def scan_output(out_dir, raw_frames, fixture, script, tax, mode=Mode.VISGUARDIAN):
    """Assert every sink frame matches the policy timeline independently."""
    states = {c: H for c in tax.classes}
    slider = [5]
    patches = {}
    pending = sorted(script, key=lambda s: s.frame)
    pos = 0
    for i, raw in enumerate(raw_frames):
        while pos < len(pending) and pending[pos].frame <= i:
            _naive_apply(states, pending[pos].event, tax, slider)
            pos += 1
        if mode is Mode.SLIDER_BASELINE:
            hidden = slider_hidden_classes(slider[0], tax)
            effective = {c: (H if c in hidden else R) for c in states}
        else:
            effective = states
        out = load_frame(out_dir / f"{i:06d}.png")
        height, width = raw.shape[:2]
        covered = np.zeros((height, width), dtype=bool)
        for det in fixture.get(i, []):
            cls, bbox, track = det["class"], det["bbox"], det["track"]
            x, y, w, h = _naive_clamp(bbox, width, height)
            region = out[y : y + h, x : x + w]
            canonical = tax.canonicalize(cls)
            if canonical is not None and effective[canonical] is H:
                if track not in patches:
                    patches[track] = raw[y : y + h, x : x + w].tolist()
                expected = np.array(_naive_scale(patches[track], w, h), dtype=np.uint8)
                assert (region == expected).all(), f"frame {i} box {cls} not frozen"
                covered[y : y + h, x : x + w] = True
            else:
                assert (region == raw[y : y + h, x : x + w]).all(), f"frame {i} box {cls} altered"
        assert (out[~covered] == raw[~covered]).all(), f"frame {i} background altered"


def privacy_scene(tmp_path, count=8):
    frames = make_frames(count, width=64, height=48, seed=3)
    frame_dir = write_frame_dir(tmp_path / "frames", frames)
    per_frame = {
        i: [
            {"class": "underwear", "bbox": [4, 4, 12, 10], "conf": 0.9, "track": 1},
            {"class": "swimsuit", "bbox": [24, 4, 12, 10], "conf": 0.9, "track": 2},
            {"class": "toilet", "bbox": [42, 20, 14, 12], "conf": 0.9, "track": 3},
            {"class": "book", "bbox": [4, 30, 10, 8], "conf": 0.9, "track": 4},
            {"class": "coffee mug", "bbox": [40, 4, 8, 6], "conf": 0.9, "track": 5},
        ]
        for i in range(count)
    }
    fixture_path = write_fixture(tmp_path / "detections.jsonl", per_frame)
    return frame_dir, fixture_path, frames, per_frame


def make_config(frame_dir, fixture_path, out_dir, **kwargs):
    return PipelineConfig(
        frames_dir=frame_dir,
        detections_path=fixture_path,
        out_dir=out_dir,
        write_figure=kwargs.pop("write_figure", False),
        **kwargs,
    )


def test_default_run_occludes_everything(tmp_path, tax):
    frame_dir, fixture_path, frames, per_frame = privacy_scene(tmp_path)
    out_dir = tmp_path / "out"
    report = run(make_config(frame_dir, fixture_path, out_dir, write_figure=True))
    assert report.frames == 8
    assert report.new_class_events == 4  # underwear, swimsuit, toilet, book
    assert report.interactions == 0
    assert sorted(p.name for p in out_dir.glob("*.png") if p.stem.isdigit()) == [
        f"{i:06d}.png" for i in range(8)
    ]
    assert (out_dir / "metrics.json").is_file()
    assert (out_dir / "frame_metrics.csv").is_file()
    assert (out_dir / "latency.png").is_file()
    scan_output(out_dir, frames, per_frame, [], tax)


def test_zero_frame_source(tmp_path, tax):
    frame_dir = tmp_path / "frames"
    frame_dir.mkdir()
    fixture_path = write_fixture(tmp_path / "detections.jsonl", {})
    report = run(make_config(frame_dir, fixture_path, tmp_path / "out"))
    assert report.frames == 0
    assert report.new_class_events == 0
    assert report.audit_digest  # digest of the fresh default-deny store


def test_scripted_group_reveal_boundary(tmp_path, tax):
    frame_dir, fixture_path, frames, per_frame = privacy_scene(tmp_path)
    out_dir = tmp_path / "out"
    script = parse_script(
        [{"frame": 5, "kind": "ApplyGroup", "anchor": "underwear", "dimension": "Category", "action": "Reveal"}]
    )
    replay(make_config(frame_dir, fixture_path, out_dir), script)
    scan_output(out_dir, frames, per_frame, script, tax)
    # Clothes boxes frozen to frame 0 before the event, live after it.
    for i in range(8):
        out = load_frame(out_dir / f"{i:06d}.png")
        underwear_now = out[4:14, 4:16]
        if i < 5:
            assert (underwear_now == frames[0][4:14, 4:16]).all()
            if i > 0:
                assert (underwear_now != frames[i][4:14, 4:16]).any()
        else:
            assert (underwear_now == frames[i][4:14, 4:16]).all()
        toilet_now = out[20:32, 42:56]
        assert (toilet_now == frames[0][20:32, 42:56]).all()  # stays occluded


def test_toggle_single_class_boundary(tmp_path, tax):
    frame_dir, fixture_path, frames, per_frame = privacy_scene(tmp_path)
    out_dir = tmp_path / "out"
    script = parse_script([{"frame": 3, "kind": "ToggleClass", "class": "book"}])
    replay(make_config(frame_dir, fixture_path, out_dir), script)
    scan_output(out_dir, frames, per_frame, script, tax)
    for i in range(8):
        out = load_frame(out_dir / f"{i:06d}.png")
        book_now = out[30:38, 4:14]
        expected = frames[0][30:38, 4:14] if i < 3 else frames[i][30:38, 4:14]
        assert (book_now == expected).all()


def test_replay_determinism(tmp_path, tax):
    frame_dir, fixture_path, _, _ = privacy_scene(tmp_path)
    script_raw = [
        {"frame": 2, "kind": "ToggleClass", "class": "book"},
        {"frame": 5, "kind": "ApplyGroup", "anchor": "toilet", "dimension": "Spatial", "action": "Reveal"},
    ]
    outputs = []
    digests = []
    for name in ("a", "b"):
        out_dir = tmp_path / name
        report = replay(make_config(frame_dir, fixture_path, out_dir), parse_script(script_raw))
        outputs.append([(out_dir / f"{i:06d}.png").read_bytes() for i in range(8)])
        digests.append(report.audit_digest)
    assert outputs[0] == outputs[1]
    assert digests[0] == digests[1]


def test_empty_script_equals_run(tmp_path):
    frame_dir, fixture_path, _, _ = privacy_scene(tmp_path)
    run(make_config(frame_dir, fixture_path, tmp_path / "a"))
    replay(make_config(frame_dir, fixture_path, tmp_path / "b"), [])
    for i in range(8):
        assert (tmp_path / "a" / f"{i:06d}.png").read_bytes() == (
            tmp_path / "b" / f"{i:06d}.png"
        ).read_bytes()


def test_invalid_script_aborts_before_frame_zero(tmp_path):
    frame_dir, fixture_path, _, _ = privacy_scene(tmp_path)
    out_dir = tmp_path / "out"
    script = parse_script([{"frame": 0, "kind": "ToggleClass", "class": "doorknob"}])
    with pytest.raises(ConfigError):
        replay(make_config(frame_dir, fixture_path, out_dir), script)
    assert not list(out_dir.glob("*.png")) if out_dir.exists() else True


def test_wrong_mode_script_aborts(tmp_path):
    frame_dir, fixture_path, _, _ = privacy_scene(tmp_path)
    script = parse_script([{"frame": 0, "kind": "SetSlider", "level": 2}])
    with pytest.raises(ConfigError):
        replay(make_config(frame_dir, fixture_path, tmp_path / "out"), script)


def test_slider_mode_pipeline(tmp_path, tax):
    frame_dir, fixture_path, frames, per_frame = privacy_scene(tmp_path)
    out_dir = tmp_path / "out"
    script = parse_script([{"frame": 4, "kind": "SetSlider", "level": 1}])
    replay(make_config(frame_dir, fixture_path, out_dir, mode=Mode.SLIDER_BASELINE), script)
    scan_output(out_dir, frames, per_frame, script, tax, mode=Mode.SLIDER_BASELINE)


def test_digest_column_tracks_policy_changes(tmp_path):
    frame_dir, fixture_path, _, _ = privacy_scene(tmp_path)
    out_dir = tmp_path / "out"
    script = parse_script([{"frame": 4, "kind": "ToggleClass", "class": "book"}])
    replay(make_config(frame_dir, fixture_path, out_dir), script)
    rows = (out_dir / "frame_metrics.csv").read_text().strip().splitlines()[1:]
    digests = [line.split(",")[1] for line in rows]
    assert len(set(digests[:4])) == 1
    assert len(set(digests[4:])) == 1
    assert digests[0] != digests[4]
    audit = [json.loads(line) for line in (out_dir / "audit.jsonl").read_text().splitlines()]
    assert audit[-1]["digest"] == digests[4]


def test_audit_log_replays_to_final_digest(tmp_path, tax):
    frame_dir, fixture_path, _, _ = privacy_scene(tmp_path)
    out_dir = tmp_path / "out"
    script = parse_script(
        [
            {"frame": 1, "kind": "ToggleClass", "class": "book"},
            {"frame": 3, "kind": "ApplyGroup", "anchor": "underwear", "dimension": "Sensitivity", "action": "Reveal"},
            {"frame": 6, "kind": "ToggleClass", "class": "book"},
        ]
    )
    report = replay(make_config(frame_dir, fixture_path, out_dir), script)
    records = [json.loads(line) for line in (out_dir / "audit.jsonl").read_text().splitlines()]
    assert len(records) == 3
    store = new_store("fresh", tax)
    for record in records:
        store.apply_interaction(InteractionEvent.from_json(record["event"]))
    assert store.digest == report.audit_digest


def test_sink_error_flags_partial_report(tmp_path, monkeypatch):
    frame_dir, fixture_path, _, _ = privacy_scene(tmp_path)
    out_dir = tmp_path / "out"
    import visguardian.pipeline as pl

    real_save = pl.save_frame
    calls = {"n": 0}

    def flaky(path, frame):
        calls["n"] += 1
        if calls["n"] > 5:
            raise OSError("disk full")
        real_save(path, frame)

    monkeypatch.setattr(pl, "save_frame", flaky)
    with pytest.raises(SinkError):
        run(make_config(frame_dir, fixture_path, out_dir))
    report = json.loads((out_dir / "metrics.json").read_text())
    assert report["partial"] is True
    assert report["frames"] == 5
    assert "disk full" in report["error"]


def test_fps_cap_slows_run(tmp_path):
    frame_dir, fixture_path, _, _ = privacy_scene(tmp_path)
    report = run(make_config(frame_dir, fixture_path, tmp_path / "out", fps_cap=40.0))
    assert report.fps <= 50.0


def test_missing_inputs_are_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        run(PipelineConfig(frames_dir=tmp_path / "nope", detections_path=tmp_path / "d.jsonl", out_dir=tmp_path / "o"))
    frame_dir = write_frame_dir(tmp_path / "frames", make_frames(1))
    with pytest.raises(ConfigError):
        run(PipelineConfig(frames_dir=frame_dir, detections_path=tmp_path / "missing.jsonl", out_dir=tmp_path / "o"))


def test_bad_fps_cap_rejected(tmp_path):
    with pytest.raises(ConfigError):
        PipelineConfig(fps_cap=0.0)


def test_parse_script_validation():
    with pytest.raises(ConfigError):
        parse_script("not json")
    with pytest.raises(ConfigError):
        parse_script([{"kind": "ToggleClass", "class": "book"}])  # missing frame
    script = parse_script([{"frame": 2, "kind": "SetSlider", "level": 3}])
    assert script[0].event.level == 3
    assert script[0].event.timestamp == 2


def test_bench_smoke():
    report = run_bench(width=160, height=120, boxes=8, frames=12)
    assert report.frames == 12
    assert report.fps > 0
    assert set(report.stages) == {"detect", "policy", "sanitize", "encode", "total"}
    assert report.stages["policy"]["p95"] >= 0.0
