"""Tracking-by-detection toolkit for scenes swept at a known speed.

Trackers: :class:`~ibtrack.ibta.IbtaTracker` (information based tracking),
:class:`~ibtrack.trackers.SortTracker` and
:class:`~ibtrack.trackers.CentroidTracker`. Evaluation lives in
:mod:`ibtrack.metrics`, synthetic scenes in :mod:`ibtrack.simulator`.
"""
__version__ = "0.1.0"

from .geometry import BBox, Point, area, center, iou, translate
from .formats import DetectionRecord, GtRecord, TrackRecord
from .trackers import TrackerConfig, run_tracker
from .ibta import IbtaTracker
from .simulator import SceneConfig, simulate

__all__ = [
    "BBox", "Point", "area", "center", "iou", "translate",
    "DetectionRecord", "GtRecord", "TrackRecord",
    "TrackerConfig", "run_tracker", "IbtaTracker", "SceneConfig", "simulate",
]
