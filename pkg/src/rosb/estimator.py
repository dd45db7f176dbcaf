"""Sliding-window least-squares target localization from planar ranges.

Each measurement (p_i, d_i) gives the squared-range equation
``|p_i|^2 - 2 p_i.q + |q|^2 = d_i^2``.  Treating ``s = |q|^2`` as a free
unknown makes it linear in ``(q_x, q_y, s)``::

    2 p_i.q - s = |p_i|^2 - d_i^2
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

MAX_CONDITION = 1e8


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class Measurement:
    p: np.ndarray
    range_p: float
    step: int = 0

    def __post_init__(self):
        if not self.range_p >= 0:
            raise ValueError("range_p must be >= 0")


@dataclass(frozen=True)
class Estimate:
    q_hat: np.ndarray
    valid: bool
    condition: float
    residual_rms: float
    s: float = float("nan")


def design_system(positions: np.ndarray, ranges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    positions = np.asarray(positions, dtype=float)
    ranges = np.asarray(ranges, dtype=float)
    A = np.column_stack([2.0 * positions, -np.ones(len(positions))])
    b = np.einsum("ij,ij->i", positions, positions) - ranges**2
    return A, b


def solve_ls(positions, ranges, max_condition: float = MAX_CONDITION) -> Estimate:
    """Unconstrained LS solution for the target position.

    ``condition`` is the condition number of the normal equations (A^T A).
    Rank-deficient or badly conditioned geometries (e.g. collinear
    positions, which leave a mirror ambiguity) come back with
    ``valid=False`` rather than raising.
    """
    positions = np.asarray(positions, dtype=float)
    if len(positions) < 3:
        raise InsufficientData(f"need >= 3 measurements, got {len(positions)}")
    A, b = design_system(positions, ranges)
    U, S, Vt = np.linalg.svd(A, full_matrices=False)
    if S[-1] <= S[0] * np.finfo(float).eps * len(b):
        return Estimate(np.full(2, np.nan), False, float("inf"), float("nan"))
    condition = float((S[0] / S[-1]) ** 2)
    x = Vt.T @ ((U.T @ b) / S)
    q_hat = x[:2]
    resid = np.linalg.norm(positions - q_hat, axis=1) - np.asarray(ranges, dtype=float)
    rms = float(np.sqrt(np.mean(resid**2)))
    valid = condition <= max_condition and bool(np.all(np.isfinite(q_hat)))
    return Estimate(q_hat, valid, condition, rms, float(x[2]))


class LeastSquaresEstimator:
    """FIFO buffer of the newest ``window`` measurements plus an LS solve."""

    def __init__(self, window: int = 30, max_condition: float = MAX_CONDITION):
        if window < 3:
            raise ValueError("window must be >= 3")
        self.window = int(window)
        self.max_condition = max_condition
        self._buf: deque[Measurement] = deque(maxlen=self.window)

    def __len__(self):
        return len(self._buf)

    @property
    def measurements(self) -> list[Measurement]:
        return list(self._buf)

    def clear(self):
        self._buf.clear()

    def push(self, measurement: Measurement):
        self._buf.append(measurement)

    def add(self, p, range_p: float, step: int = 0):
        self.push(Measurement(np.array(p, dtype=float), float(range_p), step))

    def solve(self) -> Estimate:
        if len(self._buf) < 3:
            raise InsufficientData(f"need >= 3 measurements, got {len(self._buf)}")
        pos = np.array([m.p for m in self._buf])
        rng = np.array([m.range_p for m in self._buf])
        return solve_ls(pos, rng, self.max_condition)
