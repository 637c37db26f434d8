"""Constant-velocity Kalman filter over boxes, for the SORT baseline.

State vector ``(cx, cy, s, r, vx, vy, vs)`` with ``s`` the box area and ``r``
the aspect ratio ``w / h``. The aspect ratio has no velocity term. Noise
defaults follow the fixed diagonals of the public SORT reference code.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import BBox

DIM_X = 7
DIM_Z = 4
SCALE_EPS = 1e-6


class NonPositiveScale(RuntimeWarning):
    """Predicted area went non-positive; the state was clamped."""


@dataclass(frozen=True)
class KalmanNoise:
    """Diagonal noise settings (variances, not standard deviations)."""

    init_pos_var: float = 10.0
    init_vel_var: float = 10_000.0
    process_pos_var: float = 1.0
    process_vel_var: float = 0.01
    process_scale_vel_var: float = 1e-4
    meas_center_var: float = 1.0
    meas_shape_var: float = 10.0

    def initial_covariance(self) -> np.ndarray:
        return np.diag([self.init_pos_var] * 4 + [self.init_vel_var] * 3)

    def process(self) -> np.ndarray:
        return np.diag([self.process_pos_var] * 4
                       + [self.process_vel_var] * 2 + [self.process_scale_vel_var])

    def measurement(self) -> np.ndarray:
        return np.diag([self.meas_center_var] * 2 + [self.meas_shape_var] * 2)


def _transition() -> np.ndarray:
    F = np.eye(DIM_X)
    F[0, 4] = F[1, 5] = F[2, 6] = 1.0
    return F


F_CV = _transition()
H_BOX = np.eye(DIM_Z, DIM_X)


@dataclass(frozen=True, eq=False)
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray
    clamped: bool = field(default=False, compare=False)

    def to_bbox(self) -> BBox:
        return state_to_bbox(self.mean)


def bbox_to_z(b: BBox) -> np.ndarray:
    return np.array([b.x_min + b.width / 2, b.y_min + b.height / 2,
                     b.width * b.height, b.width / b.height])


def state_to_bbox(mean: np.ndarray) -> BBox:
    cx, cy, s, r = (float(v) for v in mean[:4])
    w = math.sqrt(s * r)
    h = s / w
    return BBox(cx - w / 2, cy - h / 2, w, h)


def linear_predict(x: np.ndarray, P: np.ndarray, F: np.ndarray, Q: np.ndarray):
    """Generic linear prediction ``x' = F x``, ``P' = F P F^T + Q``."""
    x = F @ x
    P = F @ P @ F.T + Q
    return x, (P + P.T) / 2


def linear_update(x: np.ndarray, P: np.ndarray, z: np.ndarray, H: np.ndarray, R: np.ndarray):
    """Generic linear update, Joseph-form covariance."""
    y = z - H @ x
    S = H @ P @ H.T + R
    K = np.linalg.solve(S.T, (P @ H.T).T).T
    x = x + K @ y
    I_KH = np.eye(P.shape[0]) - K @ H
    P = I_KH @ P @ I_KH.T + K @ R @ K.T
    return x, (P + P.T) / 2


def kf_init(b: BBox, noise: KalmanNoise = KalmanNoise()) -> KalmanState:
    mean = np.zeros(DIM_X)
    mean[:4] = bbox_to_z(b)
    return KalmanState(mean, noise.initial_covariance())


def kf_predict(st: KalmanState, noise: KalmanNoise = KalmanNoise()) -> KalmanState:
    mean, cov = linear_predict(st.mean, st.covariance, F_CV, noise.process())
    if mean[2] <= 0:
        warnings.warn(f"predicted area {mean[2]:.3g} ≤ 0, clamped", NonPositiveScale,
                      stacklevel=2)
        mean[2] = SCALE_EPS
        mean[6] = 0.0
        return KalmanState(mean, cov, clamped=True)
    return KalmanState(mean, cov)


def kf_update(st: KalmanState, z: BBox, noise: KalmanNoise = KalmanNoise()) -> KalmanState:
    mean, cov = linear_update(st.mean, st.covariance, bbox_to_z(z), H_BOX, noise.measurement())
    # the linear update can overshoot on wild measurements; keep the box valid
    mean[2] = max(mean[2], SCALE_EPS)
    mean[3] = max(mean[3], SCALE_EPS)
    return KalmanState(mean, cov)
