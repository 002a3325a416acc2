"""Regulation signals: CSV ingestion, synthetic generation and statistics."""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np
from scipy.signal import lfilter

from .errors import BadParams, Degenerate, GapError, ParseError, SignalClipWarning
from .params import TWO_SECONDS

log = logging.getLogger(__name__)

CLIP_TOL = 1e-9
KINDS = ("random-walk", "ou-process", "scaled-replay")


@dataclass
class RegulationSignal:
    """Normalized instruction series for one settlement period."""

    samples: np.ndarray
    interval: float = TWO_SECONDS
    period_id: int | str = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise BadParams("signal samples must be 1-D")
        if not np.all(np.isfinite(self.samples)):
            raise BadParams("signal contains non-finite samples")
        if np.any(np.abs(self.samples) > 1 + CLIP_TOL):
            raise BadParams("signal samples must lie in [-1, 1]")

    def __len__(self):
        return self.samples.size

    @property
    def mileage(self) -> float:
        """||r||_1 over the period."""
        return float(np.abs(self.samples).sum())

    @property
    def duration(self) -> float:
        return self.samples.size * self.interval


def _parse_time(text: str) -> float:
    """Timestamp as seconds: plain numbers are seconds, otherwise ISO 8601."""
    try:
        return float(text)
    except ValueError:
        return datetime.fromisoformat(text).timestamp()


def load_csv(path, interval: float = TWO_SECONDS, period_hours: float = 1.0) -> list[RegulationSignal]:
    """Read a ``timestamp,r`` file and cut it into settlement periods.

    Samples beyond [-1, 1] are clipped and counted in a single
    ``SignalClipWarning``. Incomplete leading/trailing periods are dropped.
    """
    step_s = interval * 3600.0
    times, values = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in row]
                if header[:2] != ["timestamp", "r"]:
                    raise ParseError("expected header 'timestamp,r'", lineno)
                continue
            if len(row) < 2:
                raise ParseError("expected two fields", lineno)
            try:
                t = _parse_time(row[0].strip())
                r = float(row[1])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if not np.isfinite(r):
                raise ParseError(f"non-finite r {row[1]!r}", lineno)
            if times:
                gap = t - times[-1]
                if abs(gap - step_s) > 1e-6 * step_s + 1e-6:
                    raise GapError(f"line {lineno}: step {gap:g}s, expected {step_s:g}s")
            times.append(t)
            values.append(r)
    if header is None:
        raise ParseError("empty file", 1)
    r = np.array(values, dtype=float)
    clipped = int(np.count_nonzero(np.abs(r) > 1 + CLIP_TOL))
    if clipped:
        warnings.warn(f"clipped {clipped} samples to [-1, 1]", SignalClipWarning, stacklevel=2)
    r = np.clip(r, -1.0, 1.0)
    if not times:
        return []

    period_s = period_hours * 3600.0
    per = int(round(period_hours / interval))
    t = np.array(times)
    idx = np.floor((t + 1e-6) / period_s).astype(np.int64)
    signals = []
    for pid in np.unique(idx):
        mask = idx == pid
        if mask.sum() != per:
            log.warning("dropping incomplete period %d (%d of %d samples)", pid, mask.sum(), per)
            continue
        signals.append(RegulationSignal(r[mask], interval, int(pid)))
    return signals


def save_csv(signals, path, start: datetime | None = None) -> None:
    """Write signals back-to-back as ``timestamp,r`` with round-trip exact values.

    Timestamps are seconds since the epoch, period ``period_id`` starting at
    ``period_id * period length`` unless ``start`` is given.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "r"])
        for k, sig in enumerate(signals):
            step_s = sig.interval * 3600.0
            if start is not None:
                t0 = (start + timedelta(seconds=k * sig.duration * 3600.0)).timestamp()
            else:
                t0 = float(sig.period_id) * sig.duration * 3600.0
            for i, x in enumerate(sig.samples):
                w.writerow([repr(t0 + i * step_s), repr(float(x))])


def fold(x: np.ndarray) -> np.ndarray:
    """Reflect values into [-1, 1] at the boundaries (triangle-wave folding)."""
    y = np.mod(np.asarray(x, dtype=float) + 1.0, 4.0)
    y = np.where(y > 2.0, 4.0 - y, y)
    return y - 1.0


def _need(params, key, default, positive=True):
    v = params.get(key, default)
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise BadParams(f"{key}: not a number") from None
    if positive and not v > 0:
        raise BadParams(f"{key} must be > 0")
    return v


def synthesize(kind: str, seed: int, length: int, params: dict | None = None,
               interval: float = TWO_SECONDS, period_id=0) -> RegulationSignal:
    """Generate a bounded, zero-mean-ish signal deterministically from ``seed``.

    random-walk: ``sigma`` step std.
    ou-process: ``tau_s`` mean-reversion time in seconds, ``sigma`` stationary std.
    scaled-replay: ``base`` array replayed from a seeded offset, times ``scale``
    plus Gaussian ``noise``.
    All kinds are reflected into [-1, 1].
    """
    params = dict(params or {})
    if length < 1:
        raise BadParams("length must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "random-walk":
        sigma = _need(params, "sigma", 0.05)
        x = np.cumsum(rng.normal(0.0, sigma, length))
    elif kind == "ou-process":
        tau = _need(params, "tau_s", 300.0)
        sigma = _need(params, "sigma", 0.45)
        a = np.exp(-interval * 3600.0 / tau)
        eps = rng.normal(0.0, sigma * np.sqrt(1 - a * a), length)
        x0 = rng.normal(0.0, sigma)
        # AR(1) recursion from a stationary start
        x = lfilter([1.0], [1.0, -a], eps, zi=[a * x0])[0]
    elif kind == "scaled-replay":
        base = np.asarray(params.get("base", []), dtype=float)
        if base.size == 0:
            raise BadParams("scaled-replay needs a non-empty 'base'")
        scale = _need(params, "scale", 1.0)
        noise = _need(params, "noise", 0.0, positive=False)
        if noise < 0:
            raise BadParams("noise must be >= 0")
        start = int(rng.integers(base.size))
        x = np.resize(np.roll(base, -start), length) * scale
        if noise:
            x = x + rng.normal(0.0, noise, length)
    else:
        raise BadParams(f"unknown signal kind {kind!r}; expected one of {KINDS}")
    return RegulationSignal(fold(x), interval, period_id)


def synthesize_corpus(kind: str, seed: int, n_periods: int, params: dict | None = None,
                      interval: float = TWO_SECONDS, period_hours: float = 1.0,
                      debias: float | None = None) -> tuple[list[RegulationSignal], dict]:
    """One continuous synthetic series cut into ``n_periods`` settlement periods.

    ``debias`` (an efficiency) makes every period energy-neutral. Returns the
    signals and a manifest recording how to regenerate them.
    """
    if n_periods < 1:
        raise BadParams("n_periods must be >= 1")
    per = int(round(period_hours / interval))
    whole = synthesize(kind, seed, per * n_periods, params, interval).samples
    signals = []
    for k in range(n_periods):
        sig = RegulationSignal(whole[k * per:(k + 1) * per], interval, k)
        if debias is not None:
            sig = debias_energy(sig, debias)
        signals.append(sig)
    manifest = {
        "kind": kind,
        "seed": int(seed),
        "n_periods": int(n_periods),
        "interval_hours": interval,
        "period_hours": period_hours,
        "debias_efficiency": debias,
        "params": {k: v for k, v in (params or {}).items() if k != "base"},
    }
    return signals, manifest


def energy_imbalance(samples: np.ndarray, eta: float) -> float:
    """Efficiency-weighted charge minus discharge, in normalized units."""
    pos = np.clip(samples, 0.0, None).sum()
    neg = np.clip(-samples, 0.0, None).sum()
    return float(eta * pos - neg / eta)


def debias_energy(signal: RegulationSignal, eta: float, tol: float = 1e-10) -> RegulationSignal:
    """Shift the signal by a constant so that it is energy neutral after losses.

    The shift is found by bisection on the clipped series, so the balance
    still holds after clipping to [-1, 1].
    """
    r = signal.samples
    if r.size == 0:
        raise Degenerate("empty signal")
    if np.ptp(r) == 0 and r[0] != 0:
        raise Degenerate("constant non-zero signal cannot be made energy neutral")

    def f(c):
        return energy_imbalance(np.clip(r - c, -1.0, 1.0), eta)

    if f(0.0) == 0.0:
        return RegulationSignal(r.copy(), signal.interval, signal.period_id)
    # f is piecewise linear and nonincreasing in c
    lo, hi = float(r.min()) - 1.0, float(r.max()) + 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    flo, fhi = f(lo), f(hi)
    candidates = [(abs(flo), lo), (abs(fhi), hi)]
    if flo != fhi:
        c = lo + flo * (hi - lo) / (flo - fhi)
        candidates.append((abs(f(c)), c))
    c = min(candidates)[1]
    return RegulationSignal(np.clip(r - c, -1.0, 1.0), signal.interval, signal.period_id)


def mu_r(signals) -> float:
    """Mean per-period mileage ||r||_1 across a corpus."""
    signals = list(signals)
    if not signals:
        raise BadParams("mu_r needs at least one signal")
    return float(np.mean([s.mileage for s in signals]))
