"""Capacity bidding under a performance chance constraint.

Under the threshold policy the performance index of a period depends only on
``gamma``, the usable energy per MW of regulation capacity (hours). The
``xi``-confidence performance curve over ``gamma`` is calibrated by
simulation on historical signals and inverted to size the capacity offer.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import isotonic_regression

from .battery import BatterySpec
from .control import simulate_dispatch, threshold_depth
from .errors import (CapExceeded, ConfigError, InsufficientData, NonInvertible,
                     OutOfRange, ZeroCapacity)
from .params import MarketParams
from .performance import linear_index


def penalty_price(mu_lambda: float, delta: float, mu_r: float, interval: float) -> float:
    return delta * mu_lambda / (mu_r * interval)


def cycle_depth_for_price(mu_lambda: float, spec: BatterySpec, params: MarketParams) -> float:
    return threshold_depth(penalty_price(mu_lambda, params.delta, params.mu_r, params.interval), spec)


def gamma_of(mu_lambda: float, capacity: float, spec: BatterySpec, params: MarketParams) -> float:
    """Usable energy under the policy per MW of capacity, in hours."""
    if not capacity > 0:
        raise ZeroCapacity("gamma is undefined for zero capacity")
    u = cycle_depth_for_price(mu_lambda, spec, params)
    return min(spec.usable_energy, u * spec.energy_capacity) / capacity


@dataclass
class GammaCurve:
    """Performance index reached with confidence ``xi`` as a function of gamma."""

    xi: float
    delta: float
    gammas: np.ndarray
    quantiles: np.ndarray
    corpus_id: str = ""

    def __post_init__(self):
        self.gammas = np.asarray(self.gammas, dtype=float)
        self.quantiles = np.asarray(self.quantiles, dtype=float)
        if self.gammas.shape != self.quantiles.shape or self.gammas.size == 0:
            raise ConfigError("gamma curve needs matching, non-empty grids")
        if np.any(np.diff(self.gammas) <= 0):
            raise ConfigError("gamma grid must be strictly increasing")

    @property
    def grid(self) -> list[tuple[float, float]]:
        return list(zip(self.gammas.tolist(), self.quantiles.tolist()))

    def __call__(self, gamma: float) -> float:
        return float(np.interp(gamma, self.gammas, self.quantiles))

    def to_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write(f"# xi={self.xi!r} delta={self.delta!r} corpus={self.corpus_id}\n")
            w = csv.writer(fh)
            w.writerow(["gamma_hours", "perf_quantile"])
            for g, q in self.grid:
                w.writerow([repr(g), repr(q)])

    @classmethod
    def from_csv(cls, path) -> "GammaCurve":
        meta = {}
        rows = []
        with open(path, newline="") as fh:
            for line in fh:
                if line.startswith("#"):
                    for token in line[1:].split():
                        if "=" in token:
                            k, v = token.split("=", 1)
                            meta[k] = v
                    continue
                rows.append(line.strip())
        body = list(csv.reader(rows[1:]))
        try:
            g = [float(a) for a, _ in body]
            q = [float(b) for _, b in body]
            return cls(float(meta["xi"]), float(meta["delta"]), np.array(g), np.array(q),
                       meta.get("corpus", ""))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"malformed gamma curve file {path}: {exc}") from None


def normalized_performance(samples: np.ndarray, gamma: float, efficiency: float,
                           interval: float, delta: float) -> float:
    """Index of a unit-capacity battery whose policy window is ``gamma`` MWh.

    Energy limits are taken as non-binding, so the window floats with the
    running marks exactly as it does when the cycle-depth threshold binds.
    """
    b, _, _, _ = simulate_dispatch(samples, 0.0, -math.inf, math.inf, gamma,
                                   interval, efficiency)
    return linear_index(float(np.abs(samples - b).sum()), float(np.abs(samples).sum()), delta)


def lower_quantile(values: np.ndarray, xi: float) -> float:
    """Largest q with at least ``ceil(xi * n)`` values >= q."""
    v = np.sort(np.asarray(values, dtype=float))[::-1]
    k = max(1, math.ceil(xi * v.size - 1e-12))
    return float(v[k - 1])


def performance_table(signals, gamma_grid, efficiency: float, delta: float) -> np.ndarray:
    """Index of every period (columns) at every gamma (rows)."""
    return np.array([[normalized_performance(s.samples, g, efficiency, s.interval, delta)
                      for s in signals] for g in gamma_grid])


def curve_from_table(table: np.ndarray, gamma_grid, xi: float, delta: float,
                     corpus_id: str = "") -> GammaCurve:
    """Lower ``xi`` quantile per gamma, made monotone by pool-adjacent-violators."""
    if not 0 < xi < 1:
        raise ConfigError("xi must be in (0, 1)")
    q = np.array([lower_quantile(row, xi) for row in table])
    q = np.clip(isotonic_regression(q, increasing=True).x, 1 - delta, 1.0)
    return GammaCurve(xi, delta, np.asarray(gamma_grid, dtype=float), q, corpus_id)


def _grid(gamma_grid) -> np.ndarray:
    grid = np.asarray(sorted(set(float(g) for g in gamma_grid)))
    if grid.size == 0 or grid[0] < 0:
        raise ConfigError("gamma grid must be non-empty and non-negative")
    return grid


def calibrate_gamma_curves(signals, xis, delta: float, gamma_grid, efficiency: float = 1.0,
                           corpus_id: str = "") -> dict[float, GammaCurve]:
    """Calibrate several confidence levels from one simulation pass."""
    signals = list(signals)
    if not signals:
        raise InsufficientData("no signal periods to calibrate on")
    n = len(signals)
    for xi in xis:
        if 0 < xi < 1 and n * (1 - xi) < 20 - 1e-9:
            warnings.warn(f"only {n} periods for xi={xi}; quantile estimate is coarse",
                          stacklevel=3)
    grid = _grid(gamma_grid)
    table = performance_table(signals, grid, efficiency, delta)
    return {xi: curve_from_table(table, grid, xi, delta, corpus_id) for xi in xis}


def calibrate_gamma_curve(signals, xi: float, delta: float, gamma_grid,
                          efficiency: float = 1.0, corpus_id: str = "") -> GammaCurve:
    """Empirical ``xi``-confidence performance over ``gamma_grid`` (hours)."""
    return calibrate_gamma_curves(signals, [xi], delta, gamma_grid, efficiency, corpus_id)[xi]


def inverse_gamma(curve: GammaCurve, rho: float) -> float:
    """Smallest gamma whose confidence performance reaches ``rho``."""
    lo = 1 - curve.delta
    top = float(curve.quantiles.max())
    if not lo < rho <= top:
        raise OutOfRange(f"rho={rho:g} outside ({lo:g}, {top:g}]")
    q, g = curve.quantiles, curve.gammas
    i = int(np.argmax(q >= rho))
    if i == 0:
        return float(g[0])
    return float(g[i - 1] + (rho - q[i - 1]) * (g[i] - g[i - 1]) / (q[i] - q[i - 1]))


def max_capacity(spec: BatterySpec, params: MarketParams, curve: GammaCurve) -> float:
    """Largest capacity meeting ``rho_min`` with confidence ``xi`` (C-bar)."""
    g = inverse_gamma(curve, params.rho_min)
    if g <= 0:
        return spec.power_rating
    return min(spec.power_rating, spec.usable_energy / g)


def optimal_capacity(mu_lambda: float, spec: BatterySpec, params: MarketParams,
                     curve: GammaCurve) -> float:
    """Profit-maximizing capacity given an expected clearing price."""
    g = inverse_gamma(curve, params.rho_min)
    u = cycle_depth_for_price(mu_lambda, spec, params)
    usable = min(spec.usable_energy, u * spec.energy_capacity)
    if g <= 0:
        return spec.power_rating if usable > 0 else 0.0
    return min(spec.power_rating, usable / g)


def price_for_capacity(capacity: float, spec: BatterySpec, params: MarketParams,
                       curve: GammaCurve, tol: float = 1e-8) -> float:
    """Smallest expected price at which ``optimal_capacity`` reaches ``capacity``.

    Bisection on the price to relative tolerance ``tol`` (absolute $/MW below $1/MW).
    """
    cbar = max_capacity(spec, params, curve)
    if capacity <= 0 or capacity > cbar * (1 + 1e-12):
        raise NonInvertible(f"capacity {capacity:g} MW outside (0, {cbar:g}]")
    target = min(capacity, cbar)
    lo, hi = 0.0, max(1.0, params.mu_lambda)
    while optimal_capacity(hi, spec, params, curve) < target:
        lo, hi = hi, 2 * hi
        if hi > 1e15:
            raise NonInvertible(f"capacity {capacity:g} MW not reached at any price")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if optimal_capacity(mid, spec, params, curve) < target:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass
class BidCurve:
    """Ordered ``(price $/MW, capacity MW)`` offer segments."""

    segments: list[tuple[float, float]] = field(default_factory=list)

    @property
    def prices(self) -> np.ndarray:
        return np.array([p for p, _ in self.segments])

    @property
    def capacities(self) -> np.ndarray:
        return np.array([c for _, c in self.segments])

    @property
    def total(self) -> float:
        return float(self.capacities.sum()) if self.segments else 0.0

    def cleared(self, price: float) -> float:
        """Capacity of the longest prefix priced at or below ``price``."""
        total = 0.0
        for p, c in self.segments:
            if p > price:
                break
            total += c
        return total

    def to_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["segment", "price_per_mw", "capacity_mw"])
            for j, (p, c) in enumerate(self.segments, start=1):
                w.writerow([j, repr(p), repr(c)])

    @classmethod
    def from_csv(cls, path) -> "BidCurve":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(l for l in fh if not l.startswith("#"))]
        try:
            return cls([(float(p), float(c)) for _, p, c in rows[1:]])
        except ValueError as exc:
            raise ConfigError(f"malformed bid curve file {path}: {exc}") from None


def build_bid_curve(segments, spec: BatterySpec, params: MarketParams,
                    curve: GammaCurve, tol: float = 1e-8) -> BidCurve:
    """Price each capacity segment so cumulative payment matches the inverse optimal capacity.

    Segments are added while the cumulative capacity stays within C-bar.
    """
    segs = [float(c) for c in segments]
    if any(c <= 0 for c in segs):
        raise ConfigError("bid segments must be positive")
    cbar = max_capacity(spec, params, curve)
    if segs and segs[0] > cbar * (1 + 1e-12):
        raise CapExceeded(f"first segment {segs[0]:g} MW exceeds C-bar {cbar:g} MW")
    out = []
    paid = 0.0
    total = 0.0
    for c in segs:
        if total + c > cbar * (1 + 1e-12):
            break
        total += c
        lam_total = price_for_capacity(total, spec, params, curve, tol)
        price = (lam_total * total - paid) / c
        out.append((price, c))
        paid += price * c
    return BidCurve(out)
