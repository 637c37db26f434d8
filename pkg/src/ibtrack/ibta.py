"""Information based tracking (IBTA).

A Kalman-free tracker for scenes that translate at a known, nearly constant
speed past the camera. Each frame it

1. scores the spatial relation of overlapping detections (location scores),
2. predicts every track by shifting it ``v_avg`` along the motion axis and
   gates candidates with IOU plus a circular buffer of radius
   ``v_max - v_avg`` around the predicted centre,
3. matches greedily by IOU, then resolves leftovers by size: a missing
   smaller object whose larger partner was matched is carried along with the
   partner (an inferred box), while unmatched larger or isolated detections
   first try to revive a recently dead track before opening a new one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formats import INFERRED, MATCHED, TrackRecord
from .geometry import BBox, Point, area, boxes_to_array, center, centers_of, half_diagonal, iou, \
    iou_matrix, translate
from .trackers import CONFIRMED, DEAD, TENTATIVE, BaseTracker, Track, TrackerConfig

LARGER = 0
LEFT, CENTRAL, RIGHT = 1, 2, 3
_TIE_SCALE = 1e6


def _horizontal_position(small: BBox, large: BBox) -> int:
    cx = small.x_min + small.width / 2
    third = large.width / 3
    if cx < large.x_min + third:
        return LEFT
    if cx > large.x_min + 2 * third:
        return RIGHT
    return CENTRAL


def pair_neighbors(boxes: list[BBox], threshold: float) -> tuple[list[int | None], list[int | None]]:
    """Location scores plus the index of each box's larger partner.

    Boxes are visited largest first. A box with an overlapping (IOU above
    ``threshold``) box that is larger pairs with the one it overlaps most and
    is scored 1/2/3 by where its centre falls among that partner's horizontal
    thirds. A box whose overlapping neighbours are all smaller is scored 0;
    a box with no such neighbour gets ``None``.
    """
    n = len(boxes)
    scores: list[int | None] = [None] * n
    partners: list[int | None] = [None] * n
    if n < 2:
        return scores, partners
    ious = iou_matrix(boxes_to_array(boxes), boxes_to_array(boxes))
    adj = ious > threshold
    np.fill_diagonal(adj, False)
    order = sorted(range(n), key=lambda i: (-area(boxes[i]), i))
    rank = {i: r for r, i in enumerate(order)}
    for i in order:
        nbrs = np.flatnonzero(adj[i])
        if nbrs.size == 0:
            continue
        larger = [j for j in nbrs if rank[j] < rank[i]]
        if not larger:
            scores[i] = LARGER
            continue
        p = max(larger, key=lambda j: (ious[i, j], -rank[j]))
        partners[i] = int(p)
        scores[i] = _horizontal_position(boxes[i], boxes[p])
    return scores, partners


def assign_location_scores(boxes: list[BBox], neighbor_iou_threshold: float) -> list[int | None]:
    return pair_neighbors(boxes, neighbor_iou_threshold)[0]


@dataclass(frozen=True)
class PredictedPosition:
    raw_box: BBox
    buffer_center: Point
    buffer_radius: float


def predict_position(t: Track, cfg: TrackerConfig, steps: int | None = None) -> PredictedPosition:
    """Where ``t`` should be ``steps`` frames after its box was last set.

    ``steps`` defaults to ``t.time_since_update + 1``; the shift and the
    buffer radius both scale with it.
    """
    if steps is None:
        steps = t.time_since_update + 1
    ax, ay = cfg.axis
    shift = steps * cfg.v_avg
    raw = translate(t.bbox, ax * shift, ay * shift)
    return PredictedPosition(raw, center(raw), steps * cfg.buffer_radius)


def gate(pred: PredictedPosition, d: BBox, cfg: TrackerConfig) -> bool:
    if iou(pred.raw_box, d) < cfg.iou_threshold:
        return False
    return center(d).distance(pred.buffer_center) <= pred.buffer_radius + half_diagonal(d)


def _gate_matrix(tracks, steps, boxes, cfg):
    """Vectorised :func:`gate` for every (track, detection) pair."""
    ax, ay = cfg.axis
    raw = boxes_to_array([t.bbox for t in tracks])
    shift = np.asarray(steps, dtype=float) * cfg.v_avg
    raw[:, 0] += ax * shift
    raw[:, 1] += ay * shift
    radius = np.asarray(steps, dtype=float) * cfg.buffer_radius
    det = boxes_to_array(boxes)
    ious = iou_matrix(raw, det)
    rc = centers_of(raw)
    dc = centers_of(det)
    dist = np.hypot(rc[:, None, 0] - dc[None, :, 0], rc[:, None, 1] - dc[None, :, 1])
    reach = radius[:, None] + np.hypot(det[:, 2], det[:, 3])[None, :] / 2
    return ious, (ious >= cfg.iou_threshold) & (dist <= reach)


def _greedy(ious, ok, tie_break=None):
    """Greedy matching by descending IOU over pairs where ``ok`` holds.

    IOUs equal to within 1e-6 count as tied; ties go to pairs whose
    ``tie_break`` flag is true, then to lower row and column indices.
    """
    rows, cols = np.nonzero(ok)
    if rows.size == 0:
        return []
    q = np.rint(ious[rows, cols] * _TIE_SCALE)
    pref = np.zeros(rows.size) if tie_break is None else ~tie_break[rows, cols]
    order = np.lexsort((cols, rows, pref, -q))
    used_r, used_c, out = set(), set(), []
    for k in order:
        r, c = int(rows[k]), int(cols[k])
        if r in used_r or c in used_c:
            continue
        used_r.add(r)
        used_c.add(c)
        out.append((r, c))
    return out


class IbtaTracker(BaseTracker):
    name = "ibta"

    def __init__(self, config=None, class_id=0):
        super().__init__(config, class_id)
        self.graveyard: list[Track] = []

    def _steps(self, t: Track) -> int:
        return self.frame - t.last_seen

    def _set_box(self, trk: Track, box: BBox) -> None:
        old, new = center(trk.bbox), center(box)
        gap = self._steps(trk)
        trk.displacement = ((new.cx - old.cx) / gap, (new.cy - old.cy) / gap)
        trk.bbox = box
        trk.last_seen = self.frame

    def _inside_frame(self, b: BBox) -> bool:
        c = center(b)
        w, h = self.config.frame_width, self.config.frame_height
        return (w is None or 0 <= c.cx <= w) and (h is None or 0 <= c.cy <= h)

    def _open(self, bbox, **kw):
        trk = super()._open(bbox, **kw)
        trk.last_seen = self.frame
        return trk

    def step(self, detections, frame=None):
        boxes = self._begin(detections, frame)
        cfg = self.config
        scores, partners = pair_neighbors(boxes, cfg.neighbor_iou_threshold)
        tracks = self.tracks

        pairs = []
        if tracks and boxes:
            ious, ok = _gate_matrix(tracks, [self._steps(t) for t in tracks], boxes, cfg)
            t_scores = np.array([-1 if t.location_score is None else t.location_score for t in tracks])
            d_scores = np.array([-1 if s is None else s for s in scores])
            pairs = _greedy(ious, ok, t_scores[:, None] == d_scores[None, :])

        det_track: dict[int, Track] = {}
        matched: dict[int, Track] = {}
        for i, j in pairs:
            trk = tracks[i]
            self._set_box(trk, boxes[j])
            self._hit(trk)
            trk.inferred_streak = 0
            det_track[j] = trk
            matched[trk.id] = trk

        inferred: list[Track] = []
        for trk in tracks:
            if trk.id in matched:
                continue
            partner = matched.get(trk.partner_id) if trk.location_score in (LEFT, CENTRAL, RIGHT) else None
            if (partner is not None and trk.inferred_streak < cfg.max_age
                    and trk.hits >= cfg.infer_min_hits):
                vx, vy = partner.displacement
                steps = self._steps(trk)
                box = translate(trk.bbox, vx * steps, vy * steps)
                if self._inside_frame(box):
                    trk.bbox = box
                    trk.last_seen = self.frame
                    trk.inferred_streak += 1
                    inferred.append(trk)
                    continue
            self._age(trk)

        revived = self._revive(boxes, scores, partners, det_track)
        opened = []
        for j, b in enumerate(boxes):
            if j not in det_track:
                det_track[j] = self._open(b)
                opened.append(det_track[j])

        for j, trk in det_track.items():
            trk.location_score = scores[j]
            trk.partner_id = det_track[partners[j]].id if partners[j] is not None else None

        for trk in self.tracks:
            if trk.status == DEAD:
                self.graveyard.append(trk)
        self._reap()
        self.graveyard = [t for t in self.graveyard
                          if self.frame - t.died_at <= cfg.reactivation_window]

        live = sorted(list(matched.values()) + revived + opened, key=lambda t: t.id)
        recs = [t.record(self.frame, MATCHED) for t in live if t.status == CONFIRMED]
        recs += [t.record(self.frame, INFERRED) for t in inferred if t.status == CONFIRMED]
        recs.sort(key=lambda r: r.track_id)
        return recs

    def _revive(self, boxes, scores, partners, det_track) -> list[Track]:
        """Give leftover detections back to recently dead tracks when gated."""
        cands = []
        for j in range(len(boxes)):
            if j in det_track:
                continue
            s = scores[j]
            # a smaller box whose larger partner went unmatched is a new object
            if s in (LEFT, CENTRAL, RIGHT) and partners[j] not in det_track:
                continue
            cands.append(j)
        grave = [t for t in self.graveyard if self.frame - t.died_at <= self.config.reactivation_window]
        if not cands or not grave:
            return []
        sub = [boxes[j] for j in cands]
        ious, ok = _gate_matrix(grave, [self._steps(t) for t in grave], sub, self.config)
        out = []
        for gi, ci in _greedy(ious, ok):
            trk, j = grave[gi], cands[ci]
            self._set_box(trk, boxes[j])
            trk.hits += 1
            trk.time_since_update = 0
            trk.inferred_streak = 0
            trk.status = CONFIRMED if trk.hits >= self.config.min_hits else TENTATIVE
            trk.died_at = None
            det_track[j] = trk
            self.graveyard.remove(trk)
            self.tracks.append(trk)
            out.append(trk)
        return out
