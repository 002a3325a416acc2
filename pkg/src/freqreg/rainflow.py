"""Rainflow cycle identification and cycle-aging cost.

Cycles are found with the four-point stack method on the series of turning
points. Whatever is left on the stack at the end (the residue) is counted as
half cycles.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numba
import numpy as np

from .battery import BatterySpec
from .errors import EmptySeries, NonMonotoneStress, OutOfRangeDepth

EQUAL_TOL = 1e-12
DEPTH_TOL = 1e-9
FULL = 1.0
HALF = 0.5


@numba.njit(cache=True)
def turning_points(x):
    """Drop repeated samples (within EQUAL_TOL) and non-extremal interior points."""
    n = x.shape[0]
    out = np.empty(n)
    m = 0
    for i in range(n):
        v = x[i]
        if m > 0 and abs(v - out[m - 1]) <= 1e-12:
            continue
        if m >= 2 and (out[m - 1] - out[m - 2]) * (v - out[m - 1]) > 0:
            out[m - 1] = v
            continue
        out[m] = v
        m += 1
    return out[:m]


@numba.njit(cache=True)
def _rainflow_kernel(x):
    pts = turning_points(x)
    n = pts.shape[0]
    stack = np.empty(n)
    depths = np.empty(n)
    weights = np.empty(n)
    top = 0
    k = 0
    for i in range(n):
        stack[top] = pts[i]
        top += 1
        while top >= 4:
            inner = abs(stack[top - 2] - stack[top - 3])
            if inner <= abs(stack[top - 3] - stack[top - 4]) and \
                    inner <= abs(stack[top - 1] - stack[top - 2]):
                depths[k] = inner
                weights[k] = 1.0
                k += 1
                stack[top - 3] = stack[top - 1]
                top -= 2
            else:
                break
    for i in range(top - 1):
        depths[k] = abs(stack[i + 1] - stack[i])
        weights[k] = 0.5
        k += 1
    return depths[:k], weights[:k]


@numba.njit(cache=True)
def _damage(x, k, alpha):
    depths, weights = _rainflow_kernel(x)
    total = 0.0
    for i in range(depths.shape[0]):
        total += weights[i] * k * depths[i] ** alpha
    return total


@numba.njit(cache=True)
def _damage_rows(paths, k, alpha):
    out = np.empty(paths.shape[0])
    for i in range(paths.shape[0]):
        out[i] = _damage(paths[i], k, alpha)
    return out


@dataclass(frozen=True)
class Cycle:
    depth: float
    weight: float


@dataclass
class CycleSet:
    depths: np.ndarray
    weights: np.ndarray
    source_length: int = 0
    cycles: list = field(init=False, repr=False)

    def __post_init__(self):
        self.cycles = [Cycle(float(d), float(w)) for d, w in zip(self.depths, self.weights)]

    def __len__(self):
        return len(self.cycles)

    def __iter__(self):
        return iter(self.cycles)

    @property
    def full(self) -> np.ndarray:
        return self.depths[self.weights == FULL]

    @property
    def half(self) -> np.ndarray:
        return self.depths[self.weights == HALF]

    def weighted_depth(self) -> float:
        return float(np.dot(self.depths, self.weights))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["depth", "weight"])
            for c in self.cycles:
                w.writerow([repr(c.depth), c.weight])


def _as_series(soc_series) -> np.ndarray:
    x = np.ascontiguousarray(soc_series, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise EmptySeries("rainflow needs a non-empty 1-D series")
    return x


def rainflow(soc_series) -> CycleSet:
    x = _as_series(soc_series)
    depths, weights = _rainflow_kernel(x)
    return CycleSet(depths, weights, source_length=x.size)


def stress(depth: float, spec: BatterySpec) -> float:
    """Fractional cycle life lost to one full cycle of ``depth``."""
    if depth < 0 or depth > 1 + DEPTH_TOL:
        raise OutOfRangeDepth(f"cycle depth {depth!r} outside [0, 1]")
    return spec.stress_k * depth ** spec.stress_alpha


def life_loss(soc_series, spec: BatterySpec) -> float:
    """Weighted sum of stress over the rainflow cycles of ``soc_series``."""
    x = _as_series(soc_series)
    return float(_damage(x, spec.stress_k, spec.stress_alpha))


def aging_cost(soc_series, spec: BatterySpec) -> float:
    """Dollar cost of cycle aging, E * R * sum(weight * stress(depth))."""
    return spec.energy_capacity * spec.replacement_cost * life_loss(soc_series, spec)


def aging_cost_many(soc_paths: np.ndarray, spec: BatterySpec) -> np.ndarray:
    """Row-wise ``aging_cost`` for a 2-D array of SoC paths."""
    paths = np.ascontiguousarray(soc_paths, dtype=float)
    return (spec.energy_capacity * spec.replacement_cost
            * _damage_rows(paths, spec.stress_k, spec.stress_alpha))


def _check_convex(spec: BatterySpec) -> None:
    if spec.stress_alpha <= 1:
        raise NonMonotoneStress("stress exponent must exceed 1")


def phi_derivative(u: float, spec: BatterySpec) -> float:
    """Marginal stress dPhi/du."""
    _check_convex(spec)
    if u < 0:
        raise OutOfRangeDepth(f"negative depth {u!r}")
    return spec.stress_k * spec.stress_alpha * u ** (spec.stress_alpha - 1)


def phi_derivative_inverse(y: float, spec: BatterySpec) -> float:
    """Depth at which the marginal stress equals ``y``, clipped to [0, 1]."""
    _check_convex(spec)
    if y <= 0:
        return 0.0
    u = (y / (spec.stress_k * spec.stress_alpha)) ** (1.0 / (spec.stress_alpha - 1))
    return min(u, 1.0)


def invert_increasing(fn, y: float, lo: float = 0.0, hi: float = 1.0,
                      tol: float = 1e-10) -> float:
    """Bisection inverse of an increasing ``fn`` on [lo, hi], clipped at the ends.

    Used for stress models without a closed-form derivative inverse.
    """
    if y <= fn(lo):
        return lo
    if y >= fn(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
