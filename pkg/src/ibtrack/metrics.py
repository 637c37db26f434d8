"""Tracking and detection metrics.

CLEAR MOT (MOTA, MOTP in its overlap form, ID switches), identity metrics
(IDP, IDR, IDF1) under a global one-to-one identity pairing, mostly-tracked
counts, AP / mAP at a fixed IOU, and FPS.

Sequence arguments are iterables of records exposing ``frame``,
``track_id`` and ``bbox`` (``GtRecord`` or ``TrackRecord``) and are assumed
to belong to one class; :func:`evaluate` handles the per-class split.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .assignment import gated_hungarian
from .formats import CLASS_IDS, CLASS_NAMES, split_by_class
from .geometry import boxes_to_array, iou_matrix


class FrameRangeMismatch(ValueError):
    pass


class EmptyGroundTruth(ValueError):
    pass


class NoMatches(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class NoGroundTruthForClass(LookupError):
    pass


@dataclass
class MotCounts:
    fn_total: int = 0
    fp_total: int = 0
    idsw_total: int = 0
    gt_total: int = 0
    overlap_sum: float = 0.0
    match_total: int = 0


@dataclass(frozen=True)
class IdCounts:
    idtp: int
    idfp: int
    idfn: int


@dataclass
class _ClearTrace:
    counts: MotCounts
    present: dict[int, int] = field(default_factory=dict)
    matched: dict[int, int] = field(default_factory=dict)


def _by_frame(seq) -> dict[int, list]:
    out: dict[int, list] = {}
    for r in seq:
        out.setdefault(r.frame, []).append(r)
    return out


def _check_range(gt_frames, hyp_frames, n_frames):
    if n_frames is None:
        n_frames = max(gt_frames, default=0)
    bad = [f for f in hyp_frames if f < 1 or f > n_frames]
    if bad:
        raise FrameRangeMismatch(
            f"hypothesis frame {min(bad) if min(bad) < 1 else max(bad)} outside ground-truth range 1..{n_frames}")
    return n_frames


def _clear_trace(gt_seq, hyp_seq, match_iou: float, n_frames: int | None = None) -> _ClearTrace:
    gt_f, hyp_f = _by_frame(gt_seq), _by_frame(hyp_seq)
    n_frames = _check_range(gt_f, hyp_f, n_frames)
    c = MotCounts()
    trace = _ClearTrace(c)
    last_match: dict[int, int] = {}   # gt id -> most recent hyp id
    for f in range(1, n_frames + 1):
        gts, hyps = gt_f.get(f, []), hyp_f.get(f, [])
        c.gt_total += len(gts)
        for g in gts:
            trace.present[g.track_id] = trace.present.get(g.track_id, 0) + 1
        if not gts or not hyps:
            c.fn_total += len(gts)
            c.fp_total += len(hyps)
            continue
        sim = iou_matrix(boxes_to_array([g.bbox for g in gts]), boxes_to_array([h.bbox for h in hyps]))
        hyp_index = {h.track_id: j for j, h in enumerate(hyps)}
        pairs = []
        # keep last frame's correspondences while they still overlap enough
        for i, g in enumerate(gts):
            j = hyp_index.get(last_match.get(g.track_id))
            if j is not None and sim[i, j] >= match_iou:
                pairs.append((i, j))
        used_g = {i for i, _ in pairs}
        used_h = {j for _, j in pairs}
        free_g = [i for i in range(len(gts)) if i not in used_g]
        free_h = [j for j in range(len(hyps)) if j not in used_h]
        if free_g and free_h:
            sub = sim[np.ix_(free_g, free_h)]
            pairs += [(free_g[a], free_h[b]) for a, b in gated_hungarian(sub, match_iou)]
        for i, j in pairs:
            gid, hid = gts[i].track_id, hyps[j].track_id
            prev = last_match.get(gid)
            if prev is not None and prev != hid:
                c.idsw_total += 1
            last_match[gid] = hid
            c.overlap_sum += float(sim[i, j])
            trace.matched[gid] = trace.matched.get(gid, 0) + 1
        c.match_total += len(pairs)
        c.fn_total += len(gts) - len(pairs)
        c.fp_total += len(hyps) - len(pairs)
    return trace


def clear_match(gt_seq, hyp_seq, match_iou: float = 0.5, n_frames: int | None = None) -> MotCounts:
    """Frame-by-frame CLEAR MOT matching.

    Correspondences from the previous frame are kept while their IOU stays
    at or above ``match_iou``; the remaining pairs are assigned by Hungarian
    matching on ``1 - IOU``. An ID switch is counted whenever a GT identity
    is matched to a different hypothesis id than in its most recent match.
    """
    return _clear_trace(gt_seq, hyp_seq, match_iou, n_frames).counts


def mota(c: MotCounts) -> float:
    """``1 - (FN + FP + IDSW) / GT``; not clamped, can be negative."""
    if c.gt_total == 0:
        raise EmptyGroundTruth("MOTA undefined without ground truth boxes")
    return 1.0 - (c.fn_total + c.fp_total + c.idsw_total) / c.gt_total


def mota_identity(ids: IdCounts, idsw: int, gt_total: int) -> float:
    """MOTA with identity-level misses and false positives in place of per-frame ones."""
    if gt_total == 0:
        raise EmptyGroundTruth("MOTA undefined without ground truth boxes")
    return 1.0 - (ids.idfn + ids.idfp + idsw) / gt_total


def motp(c: MotCounts) -> float:
    """Mean IOU over all matched pairs (higher is better)."""
    if c.match_total == 0:
        raise NoMatches("MOTP undefined without matches")
    return c.overlap_sum / c.match_total


def _co_location(gt_seq, hyp_seq, match_iou, n_frames=None):
    """Per (gt id, hyp id) count of frames where both boxes overlap enough."""
    gt_f, hyp_f = _by_frame(gt_seq), _by_frame(hyp_seq)
    _check_range(gt_f, hyp_f, n_frames)
    gt_ids = sorted({r.track_id for r in gt_seq})
    hyp_ids = sorted({r.track_id for r in hyp_seq})
    gi = {g: k for k, g in enumerate(gt_ids)}
    hi = {h: k for k, h in enumerate(hyp_ids)}
    counts = np.zeros((len(gt_ids), len(hyp_ids)), dtype=np.int64)
    for f, gts in gt_f.items():
        hyps = hyp_f.get(f)
        if not hyps:
            continue
        sim = iou_matrix(boxes_to_array([g.bbox for g in gts]), boxes_to_array([h.bbox for h in hyps]))
        rows, cols = np.nonzero(sim >= match_iou)
        for a, b in zip(rows, cols):
            counts[gi[gts[a].track_id], hi[hyps[b].track_id]] += 1
    return counts, gt_ids, hyp_ids


def _ratio(num, den) -> float:
    return num / den if den else 0.0


def id_scores(c: IdCounts) -> tuple[float, float, float]:
    """IDP, IDR, IDF1; each is 0.0 when its denominator vanishes."""
    idp = _ratio(c.idtp, c.idtp + c.idfp)
    idr = _ratio(c.idtp, c.idtp + c.idfn)
    idf1 = 2 / (1 / idp + 1 / idr) if idp > 0 and idr > 0 else 0.0
    return idp, idr, idf1


def id_metrics(gt_seq, hyp_seq, match_iou: float = 0.5, n_frames: int | None = None):
    """Identity counts and ``(IdCounts, IDP, IDR, IDF1)``.

    GT and hypothesis identities are paired one-to-one to maximise the number
    of co-located boxes (IOU at or above ``match_iou``) over the whole
    sequence; that maximum is IDTP.
    """
    gt_seq, hyp_seq = list(gt_seq), list(hyp_seq)
    counts, _, _ = _co_location(gt_seq, hyp_seq, match_iou, n_frames)
    idtp = 0
    if counts.size:
        rows, cols = linear_sum_assignment(counts, maximize=True)
        idtp = int(counts[rows, cols].sum())
    c = IdCounts(idtp=idtp, idfp=len(hyp_seq) - idtp, idfn=len(gt_seq) - idtp)
    return (c, *id_scores(c))


MT_FRACTION = 0.8


def mostly_tracked(gt_seq, hyp_seq, match_iou: float = 0.5, n_frames: int | None = None,
                   fraction: float = MT_FRACTION) -> int:
    """GT identities matched in at least ``fraction`` of the frames they appear in."""
    tr = _clear_trace(gt_seq, hyp_seq, match_iou, n_frames)
    return sum(1 for gid, n in tr.present.items() if tr.matched.get(gid, 0) >= fraction * n)


def _all_point_ap(tp: np.ndarray, n_gt: int) -> float:
    if tp.size == 0:
        return 0.0
    ctp = np.cumsum(tp)
    cfp = np.cumsum(1 - tp)
    recall = ctp / n_gt
    precision = ctp / (ctp + cfp)
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    idx = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]))


def average_precision(detections, gt_boxes, iou_threshold: float = 0.5) -> float:
    """AP for one class, all-point interpolation.

    Detections are ranked by descending confidence (input order breaks ties).
    Each claims the unclaimed GT box of the same frame it overlaps most; it
    is a true positive when that IOU reaches ``iou_threshold``.
    """
    gt_f = _by_frame(gt_boxes)
    n_gt = sum(len(v) for v in gt_f.values())
    if n_gt == 0:
        raise NoGroundTruthForClass("no ground truth boxes")
    dets = sorted(enumerate(detections), key=lambda kv: (-kv[1].confidence, kv[0]))
    claimed = {f: np.zeros(len(v), dtype=bool) for f, v in gt_f.items()}
    gt_arr = {f: boxes_to_array([g.bbox for g in v]) for f, v in gt_f.items()}
    tp = np.zeros(len(dets))
    for k, (_, d) in enumerate(dets):
        if d.frame not in gt_arr:
            continue
        sim = iou_matrix(boxes_to_array([d.bbox]), gt_arr[d.frame])[0]
        sim[claimed[d.frame]] = -1.0
        best = int(np.argmax(sim))
        if sim[best] >= iou_threshold:
            claimed[d.frame][best] = True
            tp[k] = 1
    return _all_point_ap(tp, n_gt)


@dataclass
class DetectionReport:
    ap: dict[int, float]
    skipped: list[int]

    @property
    def map50(self) -> float:
        return float(np.mean(list(self.ap.values()))) if self.ap else 0.0


def mean_average_precision(detections, gt_records, iou_threshold: float = 0.5,
                           classes=CLASS_IDS) -> DetectionReport:
    """Per-class AP and the unweighted mean; classes without GT are skipped."""
    dets, gts = split_by_class(detections), split_by_class(gt_records)
    ap, skipped = {}, []
    for cls in classes:
        try:
            ap[cls] = average_precision(dets.get(cls, []), gts.get(cls, []), iou_threshold)
        except NoGroundTruthForClass:
            skipped.append(cls)
    return DetectionReport(ap, skipped)


def fps(inference_durations) -> float:
    d = list(inference_durations)
    if not d:
        raise EmptyInput("no durations")
    if any(not (x > 0 and math.isfinite(x)) for x in d):
        raise ValueError("durations must be positive and finite")
    return 1.0 / (sum(d) / len(d))


@dataclass
class ClassResult:
    class_id: int | None
    mota: float
    motp: float
    idf1: float
    idr: float
    idp: float
    mt: float
    idsw: float
    counts: MotCounts | None = None
    ids: IdCounts | None = None

    @property
    def label(self) -> str:
        return "All" if self.class_id is None else CLASS_NAMES.get(self.class_id, str(self.class_id))


def evaluate(gt_records, hyp_records, match_iou: float = 0.5, include_inferred: bool = True,
             mota_id: bool = False, n_frames: int | None = None) -> list[ClassResult]:
    """Per-class metric rows plus an ``All`` row that averages the classes.

    Classes without ground truth are left out. With ``mota_id`` MOTA uses
    the identity-level IDFN/IDFP instead of the per-frame FN/FP.
    """
    gt_records = list(gt_records)
    hyp_records = [h for h in hyp_records if include_inferred or not getattr(h, "inferred", False)]
    if n_frames is None:
        n_frames = max((g.frame for g in gt_records), default=0)
    _check_range(_by_frame(gt_records), _by_frame(hyp_records), n_frames)
    gts, hyps = split_by_class(gt_records), split_by_class(hyp_records)
    rows = []
    for cls in sorted(gts):
        g, h = gts[cls], hyps.get(cls, [])
        tr = _clear_trace(g, h, match_iou, n_frames)
        c = tr.counts
        ids, idp, idr, idf1 = id_metrics(g, h, match_iou, n_frames)
        mt = sum(1 for gid, n in tr.present.items() if tr.matched.get(gid, 0) >= MT_FRACTION * n)
        rows.append(ClassResult(
            cls,
            mota_identity(ids, c.idsw_total, c.gt_total) if mota_id else mota(c),
            motp(c) if c.match_total else 0.0,
            idf1, idr, idp, mt, c.idsw_total, c, ids,
        ))
    if rows:
        avg = {k: float(np.mean([getattr(r, k) for r in rows]))
               for k in ("mota", "motp", "idf1", "idr", "idp", "mt", "idsw")}
        rows.append(ClassResult(None, **avg))
    return rows


_COLUMNS = ("MOTA", "MOTP", "IDF1", "IDR", "IDP", "MT", "IDs")


def format_table(rows: list[ClassResult]) -> str:
    """Aligned plain-text table: ratios as percentages, counts as numbers."""
    head = f"{'Class':<16}" + "".join(f"{c:>9}" for c in _COLUMNS)
    lines = [head, "-" * len(head)]
    for r in rows:
        pct = "".join(f"{100 * v:>8.1f}%" for v in (r.mota, r.motp, r.idf1, r.idr, r.idp))
        if r.class_id is None:
            counts = f"{r.mt:>9.1f}{r.idsw:>9.1f}"
        else:
            counts = f"{int(r.mt):>9d}{int(r.idsw):>9d}"
        lines.append(f"{r.label:<16}{pct}{counts}")
    return "\n".join(lines) + "\n"


def format_csv(rows: list[ClassResult]) -> str:
    out = ["class,mota,motp,idf1,idr,idp,mt,idsw"]
    for r in rows:
        key = "all" if r.class_id is None else str(r.class_id)
        out.append(",".join([key] + [repr(float(getattr(r, k)))
                                     for k in ("mota", "motp", "idf1", "idr", "idp", "mt", "idsw")]))
    return "\n".join(out) + "\n"
