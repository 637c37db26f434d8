import pytest

from ibtrack.config import ConfigError
from ibtrack.formats import DetectionRecord
from ibtrack.geometry import BBox
from ibtrack.trackers import CentroidTracker, SortTracker, TrackerConfig, load_config, run_tracker

from conftest import det


def centered(cx, cy, w=10, h=10):
    return (cx - w / 2, cy - h / 2, w, h)


def test_cta_unique_nearest():
    t = CentroidTracker(TrackerConfig())
    (r1,) = t.step([det(1, centered(5, 5))])
    (r2,) = t.step([det(2, centered(5, 6))])
    assert r1.track_id == r2.track_id == 1


def test_cta_initialises_fresh_ids():
    t = CentroidTracker()
    recs = t.step([det(1, centered(0, 0)), det(1, centered(100, 100))])
    assert [r.track_id for r in recs] == [1, 2]


def test_cta_crossed_proximity_greedy():
    # distances: A-d0 6, A-d1 1, B-d0 4, B-d1 9 -> A<-d1 (1), then B<-d0 (4)
    t = CentroidTracker(TrackerConfig(cta_max_distance=50))
    t.step([det(1, centered(0, 0)), det(1, centered(10, 0))])
    recs = t.step([det(2, centered(6, 0)), det(2, centered(1, 0))])
    by_id = {r.track_id: r.bbox for r in recs}
    assert by_id[1] == BBox(*centered(1, 0))
    assert by_id[2] == BBox(*centered(6, 0))


def test_cta_gate_formula():
    t = CentroidTracker(TrackerConfig(v_max=15, v_avg=12))
    assert t.gate(BBox(0, 0, 30, 40), BBox(0, 0, 6, 8)) == pytest.approx(15 + 25)


def test_sort_stationary_id_stable():
    t = SortTracker()
    ids = {r.track_id for f in range(1, 11) for r in t.step([det(f, (50, 50, 30, 30))], f)}
    assert ids == {1}


def test_sort_lifecycle_new_id_after_max_age():
    cfg = TrackerConfig(max_age=3)
    t = SortTracker(cfg)
    t.step([det(1, (50, 50, 30, 30))], 1)
    t.step([det(2, (50, 50, 30, 30))], 2)
    for f in range(3, 3 + cfg.max_age + 1):
        assert t.step([], f) == []
    assert t.tracks == []
    (r,) = t.step([det(7, (50, 50, 30, 30))], 7)
    assert r.track_id == 2


def test_sort_survives_gap_within_max_age():
    t = SortTracker(TrackerConfig(max_age=3))
    t.step([det(1, (50, 50, 30, 30))], 1)
    for f in (2, 3, 4):
        t.step([], f)
    (r,) = t.step([det(5, (50, 50, 30, 30))], 5)
    assert r.track_id == 1


def test_sort_two_movers_no_switch():
    dets = [det(f, (100 + 60 * k, 50 + 12 * (f - 1), 40, 40)) for f in range(1, 21) for k in range(2)]
    recs = run_tracker("sort", dets, TrackerConfig(v_max=12))
    for f in range(1, 21):
        frame = sorted((r.bbox.x_min, r.track_id) for r in recs if r.frame == f)
        assert [tid for _, tid in frame] == [1, 2]


def test_min_hits_delays_output():
    t = SortTracker(TrackerConfig(min_hits=3))
    outs = [t.step([det(f, (0, 0, 20, 20))], f) for f in range(1, 5)]
    assert [len(o) for o in outs] == [0, 0, 1, 1]


def test_wrong_class_rejected():
    with pytest.raises(ValueError):
        CentroidTracker(class_id=1).step([det(1, (0, 0, 5, 5), cls=0)])


@pytest.mark.parametrize("name", ["ibta", "sort", "cta"])
def test_ids_increase_and_unique_per_frame(name):
    dets = [det(f, (30 * k, 10 * f + 200 * k, 20, 20), cls=k % 3) for f in range(1, 15) for k in range(6)
            if (f + k) % 4]
    recs = run_tracker(name, dets)
    seen = set()
    for r in recs:
        assert (r.frame, r.class_id, r.track_id) not in seen
        seen.add((r.frame, r.class_id, r.track_id))
    for cls in range(3):
        first_seen = {}
        for r in recs:
            if r.class_id == cls:
                first_seen.setdefault(r.track_id, r.frame)
        ids = sorted(first_seen)
        assert ids[0] == 1
        assert [first_seen[i] for i in ids] == sorted(first_seen[i] for i in ids)


@pytest.mark.parametrize("name", ["ibta", "sort", "cta"])
def test_replay_is_deterministic(name):
    dets = [det(f, (40 * k + f, 12 * f + 35 * (k % 2), 30, 30), cls=k % 2) for f in range(1, 20) for k in range(8)]
    assert run_tracker(name, dets) == run_tracker(name, dets)


def test_config_file():
    cfg = load_config("# tuned\niou_threshold = 0.25\nv_avg = 10\nv_max = 14\nmotion_axis = -x\nframe_width = 640\n")
    assert (cfg.iou_threshold, cfg.v_avg, cfg.v_max, cfg.motion_axis, cfg.frame_width) == (0.25, 10, 14, "-x", 640)
    assert cfg.max_age == 3


@pytest.mark.parametrize("text", [
    "bogus = 1",
    "v_avg = 20\nv_max = 10",
    "iou_threshold = 1.5",
    "max_age = three",
    "motion_axis = up",
    "v_avg = 1\nv_avg = 2",
    "just a line",
])
def test_bad_config(text):
    with pytest.raises(ConfigError):
        load_config(text)


def test_defaults():
    cfg = TrackerConfig()
    assert (cfg.iou_threshold, cfg.max_age, cfg.min_hits, cfg.neighbor_iou_threshold) == (0.3, 3, 1, 0.1)
