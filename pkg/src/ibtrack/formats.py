"""Readers and writers for detection, ground-truth and track files.

All three are plain comma-separated ASCII with ``#`` comment lines:

* detections: ``frame,class_id,confidence,x_min,y_min,width,height``
* ground truth: ``frame,track_id,class_id,x_min,y_min,width,height``
* tracks: ``frame,track_id,class_id,x_min,y_min,width,height,status``
  where status is ``M`` (matched to a detection) or ``I`` (inferred).

Frames are 1-based. Class ids follow the labelling convention
0 = flower, 1 = immature fruit, 2 = mature fruit.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .geometry import BBox

CLASS_NAMES = {0: "flower", 1: "immature fruit", 2: "mature fruit"}
CLASS_IDS = tuple(CLASS_NAMES)

MATCHED = "M"
INFERRED = "I"
STATUSES = (MATCHED, INFERRED)


class MalformedLine(ValueError):
    def __init__(self, line_no: int, reason: str, source: str | None = None):
        self.line_no = line_no
        self.reason = reason
        self.source = source
        where = f"{source}:" if source else "line "
        super().__init__(f"{where}{line_no}: {reason}")


class DuplicateIdentity(ValueError):
    def __init__(self, frame: int, class_id: int, track_id: int):
        self.frame = frame
        self.class_id = class_id
        self.track_id = track_id
        super().__init__(
            f"duplicate identity: frame {frame}, class {class_id}, id {track_id}"
        )


@dataclass(frozen=True)
class DetectionRecord:
    frame: int
    class_id: int
    confidence: float
    bbox: BBox


@dataclass(frozen=True)
class GtRecord:
    frame: int
    track_id: int
    class_id: int
    bbox: BBox


@dataclass(frozen=True)
class TrackRecord:
    frame: int
    track_id: int
    class_id: int
    bbox: BBox
    status: str = MATCHED

    @property
    def inferred(self) -> bool:
        return self.status == INFERRED


def _data_lines(text: str):
    for no, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield no, line


# Strict decimal grammar: no locale separators, no inf/nan.
_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_INTEGER = re.compile(r"[+-]?\d+")


def _float(tok: str, no: int, name: str) -> float:
    tok = tok.strip()
    if not _NUMBER.fullmatch(tok):
        raise MalformedLine(no, f"{name} is not a number: {tok!r}")
    val = float(tok)
    if not math.isfinite(val):
        raise MalformedLine(no, f"{name} is not finite")
    return val


def _int(tok: str, no: int, name: str) -> int:
    tok = tok.strip()
    if _INTEGER.fullmatch(tok):
        return int(tok)
    # tolerate "3.0" style integers written by some tools
    val = _float(tok, no, name)
    if val != int(val):
        raise MalformedLine(no, f"{name} must be an integer: {tok!r}")
    return int(val)


def _class(tok: str, no: int) -> int:
    cls = _int(tok, no, "class_id")
    if cls not in CLASS_IDS:
        raise MalformedLine(no, "class_id out of range")
    return cls


def _frame(tok: str, no: int) -> int:
    frame = _int(tok, no, "frame")
    if frame < 1:
        raise MalformedLine(no, "frame must be ≥ 1")
    return frame


def _bbox(toks: list[str], no: int) -> BBox:
    x, y, w, h = (_float(t, no, n) for t, n in zip(toks, ("x_min", "y_min", "width", "height")))
    if w <= 0 or h <= 0:
        raise MalformedLine(no, "width and height must be positive")
    return BBox(x, y, w, h)


def _fields(line: str, no: int, counts: tuple[int, ...]) -> list[str]:
    toks = line.split(",")
    if len(toks) not in counts:
        want = " or ".join(str(c) for c in counts)
        raise MalformedLine(no, f"expected {want} fields, got {len(toks)}")
    return toks


def parse_detections(text: str) -> list[DetectionRecord]:
    out = []
    for no, line in _data_lines(text):
        t = _fields(line, no, (7,))
        conf = _float(t[2], no, "confidence")
        if not 0.0 <= conf <= 1.0:
            raise MalformedLine(no, "confidence outside [0, 1]")
        out.append(DetectionRecord(_frame(t[0], no), _class(t[1], no), conf, _bbox(t[3:7], no)))
    return out


def _track_id(tok: str, no: int) -> int:
    tid = _int(tok, no, "track_id")
    if tid < 1:
        raise MalformedLine(no, "track_id must be ≥ 1")
    return tid


def parse_ground_truth(text: str, class_id: int | None = None) -> list[GtRecord]:
    """Parse a GT stream.

    An eighth ``status`` column is accepted and dropped, so a track file can
    be read back as ground truth. When ``class_id`` is given (per-class files)
    every line must carry that class.
    """
    out = []
    seen = set()
    for no, line in _data_lines(text):
        t = _fields(line, no, (7, 8))
        if len(t) == 8 and t[7].strip() not in STATUSES:
            raise MalformedLine(no, f"unknown status {t[7].strip()!r}")
        rec = GtRecord(_frame(t[0], no), _track_id(t[1], no), _class(t[2], no), _bbox(t[3:7], no))
        if class_id is not None and rec.class_id != class_id:
            raise MalformedLine(no, f"class {rec.class_id} in a file for class {class_id}")
        key = (rec.frame, rec.class_id, rec.track_id)
        if key in seen:
            raise DuplicateIdentity(*key)
        seen.add(key)
        out.append(rec)
    return out


def parse_tracks(text: str) -> list[TrackRecord]:
    out = []
    seen = set()
    for no, line in _data_lines(text):
        t = _fields(line, no, (7, 8))
        status = t[7].strip() if len(t) == 8 else MATCHED
        if status not in STATUSES:
            raise MalformedLine(no, f"unknown status {status!r}")
        rec = TrackRecord(_frame(t[0], no), _track_id(t[1], no), _class(t[2], no),
                          _bbox(t[3:7], no), status)
        key = (rec.frame, rec.class_id, rec.track_id)
        if key in seen:
            raise DuplicateIdentity(*key)
        seen.add(key)
        out.append(rec)
    return out


def _num(x: float) -> str:
    # shortest repr that round-trips; integral values without the ".0"
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _header(header: Iterable[str] | None) -> str:
    if not header:
        return ""
    return "".join(f"# {h}\n" for h in header)


def _box_fields(b: BBox) -> str:
    return ",".join(_num(v) for v in b.as_tuple())


def write_tracks(records: Iterable[TrackRecord], header: Iterable[str] | None = None) -> str:
    recs = sorted(records, key=lambda r: (r.frame, r.class_id, r.track_id))
    body = "".join(
        f"{r.frame},{r.track_id},{r.class_id},{_box_fields(r.bbox)},{r.status}\n" for r in recs
    )
    return _header(header) + body


def write_ground_truth(records: Iterable[GtRecord], header: Iterable[str] | None = None) -> str:
    recs = sorted(records, key=lambda r: (r.frame, r.class_id, r.track_id))
    body = "".join(
        f"{r.frame},{r.track_id},{r.class_id},{_box_fields(r.bbox)}\n" for r in recs
    )
    return _header(header) + body


def write_detections(records: Iterable[DetectionRecord], header: Iterable[str] | None = None) -> str:
    """Write detections, keeping the given order (detection order is data)."""
    body = "".join(
        f"{r.frame},{r.class_id},{_num(r.confidence)},{_box_fields(r.bbox)}\n" for r in records
    )
    return _header(header) + body


_CLASS_SUFFIX = re.compile(r"_c([012])$")


def _read(path: Path) -> str:
    with open(path, encoding="ascii", newline="") as fh:
        return fh.read()


def _tag_source(err: MalformedLine, path: Path) -> MalformedLine:
    return MalformedLine(err.line_no, err.reason, source=str(path))


def load_detections(path) -> list[DetectionRecord]:
    path = Path(path)
    try:
        return parse_detections(_read(path))
    except MalformedLine as err:
        raise _tag_source(err, path) from None


def load_tracks(path) -> list[TrackRecord]:
    path = Path(path)
    try:
        return parse_tracks(_read(path))
    except MalformedLine as err:
        raise _tag_source(err, path) from None


def load_ground_truth(*paths) -> list[GtRecord]:
    """Load GT from one combined file or from per-class files.

    Per-class files are recognised by a ``_c0``/``_c1``/``_c2`` suffix on the
    file stem; the suffix fixes the class of every line in that file.
    """
    out: list[GtRecord] = []
    seen = set()
    for p in paths:
        p = Path(p)
        m = _CLASS_SUFFIX.search(p.stem)
        try:
            recs = parse_ground_truth(_read(p), class_id=int(m.group(1)) if m else None)
        except MalformedLine as err:
            raise _tag_source(err, p) from None
        for r in recs:
            key = (r.frame, r.class_id, r.track_id)
            if key in seen:
                raise DuplicateIdentity(*key)
            seen.add(key)
        out.extend(recs)
    return out


def split_by_class(records) -> dict[int, list]:
    out: dict[int, list] = {}
    for r in records:
        out.setdefault(r.class_id, []).append(r)
    return out
