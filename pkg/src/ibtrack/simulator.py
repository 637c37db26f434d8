"""Deterministic scene simulator: ground truth plus noisy detections.

The camera translates over a static field, so every object shifts by the
same amount each frame (a rigid scene). The per-frame speed is drawn
uniformly from ``[2 v_avg - v_max, v_max]``, i.e. it never strays from
``v_avg`` by more than ``v_max - v_avg``. Detections are the GT boxes minus
random misses and scripted occlusions, with Gaussian centre noise and
Poisson false positives added.

Randomness comes from ``numpy.random.Generator(PCG64(seed))``; draws are
taken in a fixed order so a seed reproduces a scene exactly on one build.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, build_dataclass, parse_key_values
from .formats import CLASS_IDS, DetectionRecord, GtRecord, write_detections, write_ground_truth
from .geometry import BBox, iou, translate
from .trackers import AXES

RNG_NAME = "numpy PCG64"


class ConfigInvalid(ConfigError):
    pass


@dataclass(frozen=True)
class Occlusion:
    """Suppress detections of ``small_id`` in frames ``first..last`` inclusive."""

    class_id: int
    small_id: int
    large_id: int
    first: int
    last: int


@dataclass(frozen=True)
class SimObject:
    id: int
    class_id: int
    bbox: BBox   # position at frame 1


@dataclass(frozen=True)
class SceneConfig:
    image_width: float = 640.0
    image_height: float = 480.0
    frames: int = 100
    n_flower: int = 6
    n_immature: int = 6
    n_mature: int = 4
    size_min_flower: float = 36.0
    size_max_flower: float = 64.0
    size_min_immature: float = 30.0
    size_max_immature: float = 56.0
    size_min_mature: float = 34.0
    size_max_mature: float = 60.0
    v_avg: float = 12.0
    v_max: float = 15.0
    motion_axis: str = "+y"
    miss_prob: float = 0.0
    fp_rate: float = 0.0
    center_noise_sigma: float = 0.0
    # same-class objects are re-drawn while they overlap more than this
    max_overlap_iou: float = 0.3
    occlusions: tuple[Occlusion, ...] = ()
    seed: int = 0
    # explicit layout; when given, counts and size ranges are ignored
    objects: tuple[SimObject, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0 <= self.v_avg <= self.v_max:
            raise ConfigInvalid(f"need v_max >= v_avg >= 0, got v_avg={self.v_avg}, v_max={self.v_max}")
        if 2 * self.v_avg - self.v_max < 0:
            raise ConfigInvalid("v_max must not exceed 2 * v_avg (per-frame speed would go negative)")
        if self.motion_axis not in AXES:
            raise ConfigInvalid(f"motion_axis must be one of {sorted(AXES)}")
        if self.frames < 0:
            raise ConfigInvalid("frames must be >= 0")
        if self.image_width <= 0 or self.image_height <= 0:
            raise ConfigInvalid("image size must be positive")
        for p in ("miss_prob", "max_overlap_iou"):
            if not 0 <= getattr(self, p) <= 1:
                raise ConfigInvalid(f"{p} must lie in [0, 1]")
        if self.fp_rate < 0 or self.center_noise_sigma < 0:
            raise ConfigInvalid("fp_rate and center_noise_sigma must be >= 0")
        for cls in CLASS_IDS:
            lo, hi = self.size_range(cls)
            if not 0 < lo <= hi:
                raise ConfigInvalid(f"bad size range for class {cls}: {lo}..{hi}")
            if self.count(cls) < 0:
                raise ConfigInvalid("object counts must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigInvalid("seed must be a 64-bit unsigned integer")

    _NAMES = ("flower", "immature", "mature")

    def count(self, cls: int) -> int:
        return getattr(self, f"n_{self._NAMES[cls]}")

    def size_range(self, cls: int) -> tuple[float, float]:
        n = self._NAMES[cls]
        return getattr(self, f"size_min_{n}"), getattr(self, f"size_max_{n}")

    def manifest(self) -> dict:
        d = dataclasses.asdict(self)
        d["occlusions"] = [dataclasses.asdict(o) for o in self.occlusions]
        if self.objects is not None:
            d["objects"] = [[o.id, o.class_id, *o.bbox.as_tuple()] for o in self.objects]
        d["rng"] = RNG_NAME
        return d


def load_scene_config(text: str, seed: int | None = None) -> SceneConfig:
    """Read ``key = value`` text. ``occlusion = class,small,large,first,last`` may repeat."""
    vals = parse_key_values(text, repeatable=frozenset({"occlusion"}))
    occ = []
    for entry in vals.pop("occlusion", []):
        try:
            parts = [int(p) for p in entry.split(",")]
            occ.append(Occlusion(*parts))
        except (ValueError, TypeError):
            raise ConfigInvalid(f"bad occlusion entry {entry!r}") from None
    cfg = build_dataclass(SceneConfig, vals, skip=frozenset())
    try:
        return dataclasses.replace(cfg, occlusions=tuple(occ),
                                   **({} if seed is None else {"seed": seed}))
    except ConfigError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigInvalid(str(err)) from None


def _travel_extent(cfg: SceneConfig) -> float:
    return max(cfg.frames - 1, 0) * cfg.v_max


def _layout(cfg: SceneConfig, rng: np.random.Generator) -> list[SimObject]:
    """Scatter objects over the strip the camera will sweep."""
    ax, ay = AXES[cfg.motion_axis]
    travel = _travel_extent(cfg)
    out = []
    for cls in CLASS_IDS:
        lo, hi = cfg.size_range(cls)
        placed: list[BBox] = []
        for k in range(cfg.count(cls)):
            for _ in range(100):
                w, h = rng.uniform(lo, hi, size=2)
                # along the motion axis, objects start "upstream" of the image
                x = rng.uniform(-travel * max(ax, 0), cfg.image_width - w + travel * max(-ax, 0)) \
                    if ax else rng.uniform(0, cfg.image_width - w)
                y = rng.uniform(-travel * max(ay, 0), cfg.image_height - h + travel * max(-ay, 0)) \
                    if ay else rng.uniform(0, cfg.image_height - h)
                b = BBox(float(x), float(y), float(w), float(h))
                if all(iou(b, o) <= cfg.max_overlap_iou for o in placed):
                    break
            placed.append(b)
            out.append(SimObject(k + 1, cls, b))
    return out


def _visible(b: BBox, cfg: SceneConfig) -> bool:
    return b.x_max > 0 and b.x_min < cfg.image_width and b.y_max > 0 and b.y_min < cfg.image_height


def speeds(cfg: SceneConfig, rng: np.random.Generator) -> np.ndarray:
    """Per-transition speeds for frames 2..frames (length ``frames - 1``)."""
    n = max(cfg.frames - 1, 0)
    if cfg.v_max == cfg.v_avg:
        return np.full(n, float(cfg.v_avg))
    return rng.uniform(2 * cfg.v_avg - cfg.v_max, cfg.v_max, size=n)


def simulate(cfg: SceneConfig) -> tuple[list[GtRecord], list[DetectionRecord]]:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    objects = list(cfg.objects) if cfg.objects is not None else _layout(cfg, rng)
    ids = {(o.class_id, o.id) for o in objects}
    if len(ids) != len(objects):
        raise ConfigInvalid("duplicate (class, id) among objects")
    for o in cfg.occlusions:
        if (o.class_id, o.small_id) not in ids or (o.class_id, o.large_id) not in ids:
            raise ConfigInvalid(f"occlusion refers to unknown object: {o}")
    ax, ay = AXES[cfg.motion_axis]
    offsets = np.concatenate(([0.0], np.cumsum(speeds(cfg, rng))))
    classes_present = sorted({o.class_id for o in objects}) or list(CLASS_IDS)
    gt: list[GtRecord] = []
    dets: list[DetectionRecord] = []
    for f in range(1, cfg.frames + 1):
        off = float(offsets[f - 1])
        hidden = {(o.class_id, o.small_id) for o in cfg.occlusions if o.first <= f <= o.last}
        for o in objects:
            b = translate(o.bbox, ax * off, ay * off)
            if not _visible(b, cfg):
                continue
            gt.append(GtRecord(f, o.id, o.class_id, b))
            missed = rng.random() < cfg.miss_prob if cfg.miss_prob > 0 else False
            if missed or (o.class_id, o.id) in hidden:
                continue
            if cfg.center_noise_sigma > 0:
                dx, dy = rng.normal(0.0, cfg.center_noise_sigma, size=2)
                b = translate(b, float(dx), float(dy))
            conf = float(rng.uniform(0.5, 1.0))
            dets.append(DetectionRecord(f, o.class_id, conf, b))
        n_fp = int(rng.poisson(cfg.fp_rate)) if cfg.fp_rate > 0 else 0
        for _ in range(n_fp):
            cls = int(rng.choice(classes_present))
            lo, hi = cfg.size_range(cls)
            w, h = rng.uniform(lo, hi, size=2)
            x = rng.uniform(0, max(cfg.image_width - w, 0))
            y = rng.uniform(0, max(cfg.image_height - h, 0))
            conf = float(rng.uniform(0.05, 0.6))
            dets.append(DetectionRecord(f, cls, conf, BBox(float(x), float(y), float(w), float(h))))
    return gt, dets


def manifest_line(cfg: SceneConfig) -> str:
    return "manifest " + json.dumps(cfg.manifest(), sort_keys=True, separators=(",", ":"))


def write_scene(cfg: SceneConfig, out_dir) -> tuple[Path, Path]:
    """Simulate and write ``gt.txt`` and ``dets.txt`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gt, dets = simulate(cfg)
    header = [manifest_line(cfg)]
    gt_path, det_path = out_dir / "gt.txt", out_dir / "dets.txt"
    gt_path.write_text(write_ground_truth(gt, header), encoding="ascii", newline="\n")
    det_path.write_text(write_detections(dets, header), encoding="ascii", newline="\n")
    return gt_path, det_path
