import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from visguardian.detect import (
    BBox,
    Detection,
    IouTracker,
    assign_tracks,
    iou,
    load_fixture,
)
from visguardian.taxonomy import ParseError


def cell_count_iou(a: BBox, b: BBox) -> float:
    """Independent oracle: count covered integer pixel cells directly."""
    cells_a = {(x, y) for x in range(a.x, a.x + a.w) for y in range(a.y, a.y + a.h)}
    cells_b = {(x, y) for x in range(b.x, b.x + b.w) for y in range(b.y, b.y + b.h)}
    union = cells_a | cells_b
    return len(cells_a & cells_b) / len(union)


boxes = st.builds(
    BBox,
    x=st.integers(0, 60),
    y=st.integers(0, 60),
    w=st.integers(1, 40),
    h=st.integers(1, 40),
)


def test_iou_identity():
    box = BBox(3, 4, 10, 20)
    assert iou(box, box) == 1.0


def test_iou_disjoint():
    assert iou(BBox(0, 0, 10, 10), BBox(50, 50, 5, 5)) == 0.0


def test_iou_half_overlap_hand_computed():
    # (0,0,10,10) vs (5,0,10,10): intersection 5*10=50, union 200-50=150.
    value = iou(BBox(0, 0, 10, 10), BBox(5, 0, 10, 10))
    assert value == pytest.approx(1 / 3)
    assert value == pytest.approx(cell_count_iou(BBox(0, 0, 10, 10), BBox(5, 0, 10, 10)))


@given(boxes, boxes)
@settings(max_examples=150)
def test_iou_symmetric_and_matches_cell_oracle(a, b):
    assert iou(a, b) == iou(b, a)
    assert iou(a, b) == pytest.approx(cell_count_iou(a, b))


def _det(cls, bbox, track=None, frame=0, conf=0.9):
    return Detection(frame, cls, BBox(*bbox), conf, track_id=track)


def test_assign_tracks_identity():
    prev = [_det("person", (10, 10, 40, 80), track=5), _det("book", (60, 5, 10, 12), track=9)]
    cur = [_det("person", (10, 10, 40, 80)), _det("book", (60, 5, 10, 12))]
    assigned, _ = assign_tracks(prev, cur, next_id=10)
    assert [d.track_id for d in assigned] == [5, 9]


def test_assign_tracks_fresh_ids_in_input_order():
    cur = [_det("person", (0, 0, 5, 5)), _det("book", (10, 0, 5, 5)), _det("person", (20, 0, 5, 5))]
    assigned, next_id = assign_tracks([], cur, next_id=1)
    assert [d.track_id for d in assigned] == [1, 2, 3]
    assert next_id == 4


def test_assign_tracks_shifted_box_keeps_id():
    prev_box = BBox(10, 10, 40, 80)
    cur_box = BBox(12, 12, 40, 80)
    overlap = cell_count_iou(prev_box, cur_box)  # independent oracle
    assert overlap >= 0.3
    assigned, _ = assign_tracks(
        [_det("person", (10, 10, 40, 80), track=5)],
        [_det("person", (12, 12, 40, 80))],
        next_id=6,
    )
    assert assigned[0].track_id == 5
    assert iou(prev_box, cur_box) == pytest.approx(overlap)


def test_assign_tracks_requires_previous_ids():
    with pytest.raises(ValueError):
        assign_tracks([_det("person", (0, 0, 5, 5))], [], next_id=1)


def test_assign_tracks_class_never_crosses():
    prev = [_det("person", (10, 10, 20, 20), track=1)]
    cur = [_det("book", (10, 10, 20, 20))]  # same box, different class
    assigned, _ = assign_tracks(prev, cur, next_id=2)
    assert assigned[0].track_id == 2


def test_assign_tracks_one_previous_matches_one_current():
    prev = [_det("person", (10, 10, 20, 20), track=1)]
    cur = [_det("person", (11, 10, 20, 20)), _det("person", (12, 10, 20, 20))]
    assigned, _ = assign_tracks(prev, cur, next_id=2)
    ids = [d.track_id for d in assigned]
    assert sorted(ids) == [1, 2]
    assert ids[0] == 1  # higher overlap wins the inherited id


def test_tracker_never_reuses_ids():
    tracker = IouTracker()
    first = tracker.update([_det("person", (0, 0, 10, 10))])
    assert first[0].track_id == 1
    tracker.update([])  # track dies
    second = tracker.update([_det("book", (0, 0, 10, 10), frame=2)])
    assert second[0].track_id == 2


def test_fixture_basic_line(tmp_path, tax):
    path = tmp_path / "f.jsonl"
    path.write_text(
        '{"frame":0,"detections":[{"class":"person","bbox":[10,10,40,80],"conf":0.9}]}\n'
    )
    detector = load_fixture(path, tax)
    dets = detector.detect(0)
    assert len(dets) == 1
    assert dets[0].class_name == "person"
    assert dets[0].bbox == BBox(10, 10, 40, 80)
    assert dets[0].sensitive


def test_fixture_missing_frame_is_empty(tmp_path, tax):
    path = tmp_path / "f.jsonl"
    path.write_text('{"frame":0,"detections":[]}\n')
    assert load_fixture(path, tax).detect(7) == []


def test_fixture_canonicalizes_labels(tmp_path, tax):
    path = tmp_path / "f.jsonl"
    path.write_text(
        '{"frame":0,"detections":[{"class":"cellphone","bbox":[1,1,4,4],"conf":0.5}]}\n'
    )
    det = load_fixture(path, tax).detect(0)[0]
    assert det.class_name == "mobile phone"
    assert det.sensitive


def test_fixture_unknown_label_kept_verbatim(tmp_path, tax):
    path = tmp_path / "f.jsonl"
    path.write_text(
        '{"frame":0,"detections":[{"class":"Coffee Mug","bbox":[1,1,4,4],"conf":0.5}]}\n'
    )
    det = load_fixture(path, tax).detect(0)[0]
    assert det.class_name == "Coffee Mug"
    assert not det.sensitive


def test_fixture_parse_error_names_line(tmp_path, tax):
    path = tmp_path / "f.jsonl"
    path.write_text('{"frame":0,"detections":[]}\nnot json\n')
    with pytest.raises(ParseError, match="line 2"):
        load_fixture(path, tax)


def test_fixture_with_tracks_bypasses_tracker(tmp_path, tax):
    path = tmp_path / "f.jsonl"
    rows = [
        {"frame": 0, "detections": [{"class": "person", "bbox": [1, 1, 4, 4], "conf": 0.5, "track": 42}]},
        {"frame": 1, "detections": [{"class": "person", "bbox": [30, 30, 4, 4], "conf": 0.5, "track": 42}]},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    detector = load_fixture(path, tax)
    assert detector.has_full_tracks
    tracker = IouTracker()
    for i in (0, 1):
        dets = tracker.update(detector.detect(i))
        assert dets[0].track_id == 42  # disjoint boxes, id still preserved


def test_replay_determinism(tmp_path, tax):
    path = tmp_path / "f.jsonl"
    rows = []
    for i in range(6):
        rows.append(
            {
                "frame": i,
                "detections": [
                    {"class": "person", "bbox": [4 + i, 6, 18, 30], "conf": 0.9},
                    {"class": "book", "bbox": [40, 24, 14, 12], "conf": 0.8},
                ],
            }
        )
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    detector = load_fixture(path, tax)

    def replay():
        tracker = IouTracker()
        out = []
        for i in range(6):
            out.append([d.track_id for d in tracker.update(detector.detect(i))])
        return out

    first, second = replay(), replay()
    assert first == second
    for frame_ids in first:
        assert len(frame_ids) == len(set(frame_ids))  # no id used twice per frame
