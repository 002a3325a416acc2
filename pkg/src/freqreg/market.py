"""Settlement and multi-period backtests for a price-taking battery.

Payment for a period is ``perf_index * lambda * C`` when the index meets the
eligibility threshold and zero otherwise. Aging is always incurred. Periods
are simulated in order with the SoC carried across period boundaries; the
policy's running energy marks are reset at each boundary.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .battery import BatterySpec
from .bidding import BidCurve
from .control import PenaltyModel, Trajectory, run_policy
from .errors import BadParams, ConfigError, LengthMismatch, ParseError
from .params import MarketParams

HOURS_PER_MONTH = 8760.0 / 12.0
SHELF_LIFE_MONTHS = 120.0


@dataclass
class MarketPeriod:
    period_id: int | str
    clearing_price: float
    signal: object  # RegulationSignal
    cleared_capacity: float = 0.0


@dataclass
class SettlementResult:
    period_id: int | str
    price: float
    cleared_mw: float
    payment: float
    aging_cost: float
    penalty_equiv: float
    profit: float
    perf_index: float
    eligible: bool
    life_loss: float = 0.0


def settle_period(period: MarketPeriod, trajectory: Trajectory, params: MarketParams,
                  enforce_eligibility: bool = True) -> SettlementResult:
    """Payment, aging and profit of one period from the realized response."""
    if len(trajectory) != len(period.signal):
        raise LengthMismatch(
            f"trajectory has {len(trajectory)} steps, signal {len(period.signal)}")
    lam = float(period.clearing_price)
    C = float(period.cleared_capacity)
    mismatch = float(np.abs(trajectory.instruction - trajectory.dispatch).sum())
    instructed = C * float(np.abs(period.signal.samples).sum())
    if instructed > 0:
        rel = mismatch / instructed
        index = min(1.0, max(0.0, 1.0 - params.delta * rel))
    else:
        rel, index = 0.0, 1.0
    eligible = index >= params.rho_min
    paid = eligible or not enforce_eligibility
    payment = index * lam * C if paid else 0.0
    return SettlementResult(
        period_id=period.period_id, price=lam, cleared_mw=C, payment=payment,
        aging_cost=trajectory.aging_cost, penalty_equiv=params.delta * lam * C * rel,
        profit=payment - trajectory.aging_cost, perf_index=index, eligible=eligible,
        life_loss=trajectory.life_loss)


def life_expectancy(cumulative_life_loss: float, elapsed_months: float,
                    shelf_life: float = SHELF_LIFE_MONTHS) -> float:
    """Months until cycle life is exhausted at the observed rate, capped by shelf life."""
    if cumulative_life_loss < 0:
        raise ValueError("life loss must be non-negative")
    if cumulative_life_loss == 0:
        return shelf_life
    return min(shelf_life, elapsed_months / cumulative_life_loss)


@dataclass
class Strategy:
    policy: str = "proposed"  # or "simple"
    bidding: str = "fixed"  # or "bid-curve"
    capacity: float = 10.0
    bid_curve: BidCurve | None = None
    enforce_eligibility: bool = True

    def __post_init__(self):
        if self.policy not in ("proposed", "simple"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if self.bidding not in ("fixed", "bid-curve"):
            raise ConfigError(f"unknown bidding mode {self.bidding!r}")
        if self.bidding == "bid-curve" and self.bid_curve is None:
            raise ConfigError("bid-curve bidding needs a bid curve")

    def clear(self, price: float) -> float:
        if self.bidding == "fixed":
            return self.capacity
        return self.bid_curve.cleared(price)


@dataclass
class Report:
    rows: list[SettlementResult] = field(default_factory=list)
    period_hours: float = 1.0
    shelf_life: float = SHELF_LIFE_MONTHS

    @property
    def summary(self) -> dict:
        active = [r for r in self.rows if r.cleared_mw > 0]
        income = math.fsum(r.payment for r in self.rows)
        aging = math.fsum(r.aging_cost for r in self.rows)
        loss = math.fsum(r.life_loss for r in self.rows)
        months = len(self.rows) * self.period_hours / HOURS_PER_MONTH
        return {
            "periods": len(self.rows),
            "market_income": income,
            "aging_cost": aging,
            "operating_profit": income - aging,
            "life_expectancy_months": life_expectancy(loss, months, self.shelf_life),
            "average_performance": (float(np.mean([r.perf_index for r in active]))
                                    if active else None),
            "hours_under_performance": sum(self.period_hours for r in active if not r.eligible),
            "total_capacity_mwh": math.fsum(r.cleared_mw * self.period_hours for r in self.rows),
        }

    def to_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["period_id", "lambda", "cleared_mw", "perf_index", "eligible",
                        "payment", "aging", "profit"])
            for r in self.rows:
                w.writerow([r.period_id, repr(r.price), repr(r.cleared_mw), repr(r.perf_index),
                            int(r.eligible), repr(r.payment), repr(r.aging_cost), repr(r.profit)])

    def summary_json(self, **extra) -> str:
        return json.dumps({**self.summary, **extra}, indent=2, sort_keys=True)


def expected_price(history: list[float], params: MarketParams) -> float:
    if params.mu_lambda_source == "fixed" or not history:
        return params.mu_lambda
    return float(np.mean(history[-params.trailing_window:]))


def backtest(periods, strategy: Strategy, spec: BatterySpec, params: MarketParams) -> Report:
    """Simulate ``periods`` in order and settle each one."""
    per = params.samples_per_period
    report = Report(period_hours=params.period_hours)
    history: list[float] = []
    e = spec.midpoint
    for period in periods:
        if len(period.signal) != per:
            raise LengthMismatch(
                f"period {period.period_id}: {len(period.signal)} samples, expected {per}")
        mu_lambda = expected_price(history, params)
        penalty = PenaltyModel(params.delta, mu_lambda, params.mu_r, params.interval)
        C = min(strategy.clear(period.clearing_price), spec.power_rating)
        traj = run_policy(period.signal, C, spec, penalty, e,
                          simple=strategy.policy == "simple", price=period.clearing_price)
        result = settle_period(replace(period, cleared_capacity=C), traj, params,
                               strategy.enforce_eligibility)
        report.rows.append(result)
        history.append(period.clearing_price)
        e = float(traj.energy[-1])
    return report


def capacity_sweep(periods, capacities, spec: BatterySpec, params: MarketParams) -> list[dict]:
    """Profit decomposition per capacity for both policies, eligibility relaxed."""
    rows = []
    for C in capacities:
        for policy in ("proposed", "simple"):
            rep = backtest(periods, Strategy(policy=policy, capacity=float(C),
                                             enforce_eligibility=False), spec, params)
            s = rep.summary
            rows.append({
                "capacity_mw": float(C),
                "policy": policy,
                "payment": s["market_income"],
                "penalty_equiv": math.fsum(r.penalty_equiv for r in rep.rows),
                "aging": s["aging_cost"],
                "profit": s["operating_profit"],
            })
    return rows


def make_periods(signals, prices) -> list[MarketPeriod]:
    signals, prices = list(signals), list(prices)
    if len(signals) != len(prices):
        raise LengthMismatch(f"{len(signals)} signal periods but {len(prices)} prices")
    return [MarketPeriod(s.period_id, float(p), s) for s, p in zip(signals, prices)]


def synthesize_prices(seed: int, n: int, mean: float = 30.0, cv: float = 0.4,
                      daily_amplitude: float = 0.2) -> np.ndarray:
    """Lognormal hourly clearing prices ($/MW) with a daily shape."""
    if n < 1 or mean <= 0 or cv < 0:
        raise BadParams("need n >= 1, mean > 0, cv >= 0")
    rng = np.random.default_rng(seed)
    s2 = math.log1p(cv * cv)
    base = rng.lognormal(math.log(mean) - 0.5 * s2, math.sqrt(s2), n)
    hour = np.arange(n) % 24
    return base * (1 + daily_amplitude * np.sin(2 * np.pi * (hour - 6) / 24))


def load_prices(path) -> list[float]:
    """Read ``period_id,lambda`` rows."""
    out = []
    with open(path, newline="") as fh:
        rows = csv.reader(l for l in fh if not l.startswith("#"))
        header = next(rows, None)
        if header is None or [h.strip() for h in header[:2]] != ["period_id", "lambda"]:
            raise ParseError("expected header 'period_id,lambda'", 1)
        for lineno, row in enumerate(rows, start=2):
            try:
                out.append(float(row[1]))
            except (IndexError, ValueError):
                raise ParseError(f"bad price row {row!r}", lineno) from None
    return out


