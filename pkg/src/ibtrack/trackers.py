"""Shared tracker state plus the two baselines: centroid tracking and SORT.

Every tracker instance handles a single class. :func:`run_tracker` splits a
detection stream by class and drives one instance per class frame by frame.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kalman
from .assignment import gated_hungarian, hungarian
from .config import ConfigError, build_dataclass, dataclass_lines, parse_key_values
from .formats import MATCHED, DetectionRecord, TrackRecord, split_by_class
from .geometry import BBox, boxes_to_array, centers_of, iou_matrix

__all__ = [
    "AXES", "Track", "TrackerConfig", "load_config", "CentroidTracker", "SortTracker",
    "hungarian", "make_tracker", "run_tracker", "TENTATIVE", "CONFIRMED", "DEAD",
]

TENTATIVE, CONFIRMED, DEAD = "tentative", "confirmed", "dead"

AXES = {"+x": (1.0, 0.0), "-x": (-1.0, 0.0), "+y": (0.0, 1.0), "-y": (0.0, -1.0)}


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker settings. Speeds are in pixels per frame."""

    iou_threshold: float = 0.3
    neighbor_iou_threshold: float = 0.1
    v_avg: float = 12.0
    v_max: float = 15.0
    motion_axis: str = "+y"
    max_age: int = 3
    min_hits: int = 1
    reactivation_window: int = 3
    # IBTA only carries a hidden smaller object once it has this many matches
    infer_min_hits: int = 2
    # image size; when set, IBTA does not infer boxes whose centre left the frame
    frame_width: float | None = None
    frame_height: float | None = None
    # centroid gate override; None means v_max + half the larger box diagonal
    cta_max_distance: float | None = None
    kf_init_pos_var: float = 10.0
    kf_init_vel_var: float = 10_000.0
    kf_process_pos_var: float = 1.0
    kf_process_vel_var: float = 0.01
    kf_process_scale_vel_var: float = 1e-4
    kf_meas_center_var: float = 1.0
    kf_meas_shape_var: float = 10.0

    def __post_init__(self):
        for name in ("iou_threshold", "neighbor_iou_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not 0.0 <= self.v_avg <= self.v_max:
            raise ValueError(f"need v_max >= v_avg >= 0, got v_avg={self.v_avg}, v_max={self.v_max}")
        if self.motion_axis not in AXES:
            raise ValueError(f"motion_axis must be one of {sorted(AXES)}")
        if self.max_age < 0 or self.min_hits < 1 or self.reactivation_window < 0:
            raise ValueError("max_age and reactivation_window must be >= 0, min_hits >= 1")
        if self.infer_min_hits < 1:
            raise ValueError("infer_min_hits must be >= 1")
        if self.cta_max_distance is not None and self.cta_max_distance < 0:
            raise ValueError("cta_max_distance must be >= 0")

    @property
    def axis(self) -> tuple[float, float]:
        return AXES[self.motion_axis]

    @property
    def buffer_radius(self) -> float:
        return self.v_max - self.v_avg

    def kalman_noise(self) -> kalman.KalmanNoise:
        return kalman.KalmanNoise(
            init_pos_var=self.kf_init_pos_var,
            init_vel_var=self.kf_init_vel_var,
            process_pos_var=self.kf_process_pos_var,
            process_vel_var=self.kf_process_vel_var,
            process_scale_vel_var=self.kf_process_scale_vel_var,
            meas_center_var=self.kf_meas_center_var,
            meas_shape_var=self.kf_meas_shape_var,
        )

    def to_lines(self) -> list[str]:
        return dataclass_lines(self)


def load_config(text: str) -> TrackerConfig:
    """Read a :class:`TrackerConfig` from ``key = value`` text."""
    return build_dataclass(TrackerConfig, parse_key_values(text))


@dataclass
class Track:
    id: int
    class_id: int
    bbox: BBox
    kstate: kalman.KalmanState | None = None
    hits: int = 1
    time_since_update: int = 0
    location_score: int | None = None
    partner_id: int | None = None
    status: str = TENTATIVE
    # IBTA bookkeeping
    inferred_streak: int = 0
    displacement: tuple[float, float] = (0.0, 0.0)
    last_seen: int = 0
    died_at: int | None = None

    def record(self, frame: int, status: str = MATCHED) -> TrackRecord:
        return TrackRecord(frame, self.id, self.class_id, self.bbox, status)


class BaseTracker:
    """Frame counter, id allocation and lifecycle shared by all trackers."""

    name = "base"

    def __init__(self, config: TrackerConfig | None = None, class_id: int = 0):
        self.config = config or TrackerConfig()
        self.class_id = class_id
        self.tracks: list[Track] = []
        self.frame = 0
        self._next_id = 1

    def _open(self, bbox: BBox, **kw) -> Track:
        trk = Track(self._next_id, self.class_id, bbox, **kw)
        self._next_id += 1
        if trk.hits >= self.config.min_hits:
            trk.status = CONFIRMED
        self.tracks.append(trk)
        return trk

    def _hit(self, trk: Track) -> None:
        trk.hits += 1
        trk.time_since_update = 0
        if trk.status == TENTATIVE and trk.hits >= self.config.min_hits:
            trk.status = CONFIRMED

    def _age(self, trk: Track) -> None:
        trk.time_since_update += 1
        if trk.time_since_update > self.config.max_age:
            trk.status = DEAD
            trk.died_at = self.frame

    def _reap(self) -> None:
        self.tracks = [t for t in self.tracks if t.status != DEAD]

    def _emit(self, tracks) -> list[TrackRecord]:
        return [t.record(self.frame) for t in sorted(tracks, key=lambda t: t.id)
                if t.status == CONFIRMED]

    def _begin(self, detections, frame: int | None) -> list[BBox]:
        self.frame = self.frame + 1 if frame is None else frame
        for d in detections:
            if d.class_id != self.class_id:
                raise ValueError(
                    f"{self.name} tracker for class {self.class_id} got a class {d.class_id} detection")
        return [d.bbox for d in detections]

    def step(self, detections: list[DetectionRecord], frame: int | None = None) -> list[TrackRecord]:
        raise NotImplementedError


class CentroidTracker(BaseTracker):
    """Nearest-centroid association, greedy by ascending distance."""

    name = "cta"

    def gate(self, trk_box: BBox, det_box: BBox) -> float:
        cfg = self.config
        if cfg.cta_max_distance is not None:
            return cfg.cta_max_distance
        diag = max(math.hypot(trk_box.width, trk_box.height),
                   math.hypot(det_box.width, det_box.height))
        return cfg.v_max + diag / 2

    def step(self, detections, frame=None):
        boxes = self._begin(detections, frame)
        tracks = self.tracks
        matched_t, matched_d = set(), set()
        if tracks and boxes:
            ta = boxes_to_array([t.bbox for t in tracks])
            da = boxes_to_array(boxes)
            tc, dc = centers_of(ta), centers_of(da)
            dist = np.hypot(tc[:, None, 0] - dc[None, :, 0], tc[:, None, 1] - dc[None, :, 1])
            if self.config.cta_max_distance is not None:
                reach = np.full(dist.shape, self.config.cta_max_distance)
            else:
                diag = np.maximum(np.hypot(ta[:, 2], ta[:, 3])[:, None], np.hypot(da[:, 2], da[:, 3])[None, :])
                reach = self.config.v_max + diag / 2
            rows, cols = np.nonzero(dist <= reach)
            order = np.lexsort((cols, rows, dist[rows, cols]))
            for i, j in zip(rows[order].tolist(), cols[order].tolist()):
                if i in matched_t or j in matched_d:
                    continue
                matched_t.add(i)
                matched_d.add(j)
                tracks[i].bbox = boxes[j]
                self._hit(tracks[i])
        for i, trk in enumerate(tracks):
            if i not in matched_t:
                self._age(trk)
        live = [tracks[i] for i in matched_t]
        for j, b in enumerate(boxes):
            if j not in matched_d:
                live.append(self._open(b))
        self._reap()
        return self._emit(live)


class SortTracker(BaseTracker):
    """Kalman prediction plus Hungarian assignment on ``1 - IOU``."""

    name = "sort"

    def __init__(self, config=None, class_id=0):
        super().__init__(config, class_id)
        self.noise = self.config.kalman_noise()

    def step(self, detections, frame=None):
        boxes = self._begin(detections, frame)
        for trk in self.tracks:
            trk.kstate = kalman.kf_predict(trk.kstate, self.noise)
            trk.bbox = trk.kstate.to_bbox()
        tracks = self.tracks
        pairs = []
        if tracks and boxes:
            sim = iou_matrix(boxes_to_array([t.bbox for t in tracks]), boxes_to_array(boxes))
            pairs = gated_hungarian(sim, self.config.iou_threshold)
        matched_t = {i for i, _ in pairs}
        matched_d = {j for _, j in pairs}
        for i, j in pairs:
            trk = tracks[i]
            trk.kstate = kalman.kf_update(trk.kstate, boxes[j], self.noise)
            trk.bbox = trk.kstate.to_bbox()
            self._hit(trk)
        for i, trk in enumerate(tracks):
            if i not in matched_t:
                self._age(trk)
        live = [tracks[i] for i in matched_t]
        for j, b in enumerate(boxes):
            if j not in matched_d:
                live.append(self._open(b, kstate=kalman.kf_init(b, self.noise)))
        self._reap()
        return self._emit(live)


def make_tracker(name: str, config: TrackerConfig | None = None, class_id: int = 0) -> BaseTracker:
    from .ibta import IbtaTracker

    registry = {"ibta": IbtaTracker, "sort": SortTracker, "cta": CentroidTracker}
    try:
        cls = registry[name]
    except KeyError:
        raise ConfigError(f"unknown tracker {name!r}; choose from {sorted(registry)}") from None
    return cls(config, class_id)


def run_tracker(name: str, detections: list[DetectionRecord], config: TrackerConfig | None = None,
                n_frames: int | None = None, step_times: list[float] | None = None) -> list[TrackRecord]:
    """Track every class independently over frames ``1..n_frames``.

    ``n_frames`` defaults to the last frame that has a detection. When
    ``step_times`` is given, the wall time spent inside tracker steps for each
    frame (summed over classes) is appended to it.
    """
    config = config or TrackerConfig()
    if n_frames is None:
        n_frames = max((d.frame for d in detections), default=0)
    by_class = split_by_class(detections)
    per_frame: dict[int, dict[int, list]] = {}
    for cls, dets in by_class.items():
        frames: dict[int, list] = {}
        for d in dets:
            frames.setdefault(d.frame, []).append(d)
        per_frame[cls] = frames
    trackers = {cls: make_tracker(name, config, cls) for cls in sorted(by_class)}
    out: list[TrackRecord] = []
    clock = time.perf_counter
    for f in range(1, n_frames + 1):
        spent = 0.0
        for cls, trk in trackers.items():
            dets = per_frame[cls].get(f, [])
            t0 = clock()
            recs = trk.step(dets, f)
            spent += clock() - t0
            out.extend(recs)
        if step_times is not None:
            step_times.append(spent)
    out.sort(key=lambda r: (r.frame, r.class_id, r.track_id))
    return out
