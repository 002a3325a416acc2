import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freqreg.battery import BatterySpec
from freqreg.bidding import BidCurve
from freqreg.control import PenaltyModel, run_policy
from freqreg.errors import ConfigError, LengthMismatch, ParseError
from freqreg.market import (MarketPeriod, Strategy, backtest, capacity_sweep, expected_price,
                            life_expectancy, load_prices, make_periods, settle_period,
                            synthesize_prices)
from freqreg.params import MarketParams
from freqreg.signal import RegulationSignal, synthesize_corpus

SPEC = BatterySpec()
PARAMS = MarketParams(mu_r=500.0)
PEN = PenaltyModel(PARAMS.delta, 30.0, PARAMS.mu_r, PARAMS.interval)


@pytest.fixture(scope="module")
def day():
    sigs, _ = synthesize_corpus("ou-process", 5, 24, debias=0.95)
    return make_periods(sigs, synthesize_prices(6, 24))


def identity_holds(row):
    # profit is computed as payment - aging, so the sum is exact up to one rounding
    scale = max(abs(row.payment), abs(row.aging_cost))
    return abs(row.profit + row.aging_cost - row.payment) <= 2 * np.spacing(scale)


def settle(r, C, response_scale, price=40.0, enforce=True):
    sig = RegulationSignal(r)
    tr = run_policy(sig, C, SPEC, PEN, price=price)
    tr.dispatch = tr.instruction * response_scale
    return settle_period(MarketPeriod(0, price, sig, C), tr, PARAMS, enforce)


def test_perfect_response_paid_in_full():
    r = 0.3 * np.sin(np.linspace(0, 20, 1800))
    res = settle(r, 10, 1.0)
    assert res.perf_index == 1.0 and res.eligible
    assert res.payment == pytest.approx(40.0 * 10)
    assert res.profit == res.payment - res.aging_cost


def test_zero_response_is_ineligible():
    r = 0.3 * np.sin(np.linspace(0, 20, 1800))
    res = settle(r, 10, 0.0)
    assert res.perf_index == pytest.approx(1 / 3) and not res.eligible
    assert res.payment == 0.0
    assert res.penalty_equiv == pytest.approx(PARAMS.delta * 40.0 * 10)
    relaxed = settle(r, 10, 0.0, enforce=False)
    assert relaxed.payment == pytest.approx(40.0 * 10 / 3)


def test_zero_capacity_pays_nothing():
    r = 0.3 * np.sin(np.linspace(0, 20, 1800))
    res = settle(r, 0.0, 1.0)
    assert res.payment == 0.0 and res.profit == 0.0 and res.aging_cost == 0.0


def test_length_mismatch():
    sig = RegulationSignal(np.zeros(10))
    tr = run_policy(np.zeros(9), 1, SPEC, PEN)
    with pytest.raises(LengthMismatch):
        settle_period(MarketPeriod(0, 1.0, sig, 1.0), tr, PARAMS)


@pytest.mark.parametrize("loss,months,expected", [(0.0, 12, 120), (1.0, 12, 12), (0.4, 12, 30),
                                                  (0.01, 12, 120)])
def test_life_expectancy(loss, months, expected):
    assert life_expectancy(loss, months) == pytest.approx(expected)


def test_low_prices_clear_nothing(day):
    bids = BidCurve([(1e6, 1.0), (2e6, 1.0)])
    rep = backtest(day, Strategy(bidding="bid-curve", bid_curve=bids), SPEC, PARAMS)
    s = rep.summary
    assert s["total_capacity_mwh"] == 0 and s["operating_profit"] == 0
    assert s["average_performance"] is None


def test_fixed_capacity_totals(day):
    rep = backtest(day, Strategy(capacity=10), SPEC, PARAMS)
    s = rep.summary
    assert s["periods"] == 24 and s["total_capacity_mwh"] == 240
    assert s["operating_profit"] == pytest.approx(s["market_income"] - s["aging_cost"])
    for row in rep.rows:
        assert row.profit == row.payment - row.aging_cost
        assert identity_holds(row)


def test_backtest_deterministic(day, tmp_path):
    a = backtest(day, Strategy(capacity=7), SPEC, PARAMS)
    b = backtest(day, Strategy(capacity=7), SPEC, PARAMS)
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert json.loads(a.summary_json()) == json.loads(b.summary_json())


def test_report_csv_columns(day, tmp_path):
    rep = backtest(day[:2], Strategy(), SPEC, PARAMS)
    rep.to_csv(tmp_path / "r.csv", ["freqreg x"])
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "# freqreg x"
    assert lines[1] == "period_id,lambda,cleared_mw,perf_index,eligible,payment,aging,profit"


def test_eligibility_threshold_monotone(day):
    totals = []
    for rho in (0.4, 0.6, 0.75, 0.85, 0.95):
        params = dataclasses.replace(PARAMS, rho_min=rho)
        totals.append(backtest(day, Strategy(capacity=10), SPEC, params).summary["market_income"])
    assert all(a >= b for a, b in zip(totals, totals[1:]))


def test_soc_carries_across_periods(day):
    rep_first = backtest(day[:1], Strategy(), SPEC, PARAMS)
    rep_two = backtest(day[:2], Strategy(), SPEC, PARAMS)
    assert rep_two.rows[0] == rep_first.rows[0]


def test_expected_price_sources():
    assert expected_price([], PARAMS) == PARAMS.mu_lambda
    assert expected_price([10.0, 20.0], PARAMS) == 15.0
    fixed = dataclasses.replace(PARAMS, mu_lambda_source="fixed")
    assert expected_price([10.0, 20.0], fixed) == PARAMS.mu_lambda
    window = dataclasses.replace(PARAMS, trailing_window=2)
    assert expected_price([1.0, 10.0, 20.0], window) == 15.0


def test_sweep_rows(day):
    rows = capacity_sweep(day[:4], [0, 5], SPEC, PARAMS)
    assert [(r["capacity_mw"], r["policy"]) for r in rows] == [
        (0.0, "proposed"), (0.0, "simple"), (5.0, "proposed"), (5.0, "simple")]
    assert all(v == 0 for k, v in rows[0].items() if k not in ("policy",))
    for r in rows:
        assert r["profit"] == pytest.approx(r["payment"] - r["aging"])


def test_strategy_validation():
    with pytest.raises(ConfigError):
        Strategy(policy="greedy")
    with pytest.raises(ConfigError):
        Strategy(bidding="bid-curve")


def test_prices(tmp_path):
    p = synthesize_prices(1, 500)
    assert np.all(p > 0) and abs(p.mean() - 30) < 3
    assert np.array_equal(p, synthesize_prices(1, 500))
    path = tmp_path / "prices.csv"
    path.write_text("period_id,lambda\n0,12.5\n1,30\n")
    assert load_prices(path) == [12.5, 30.0]
    path.write_text("period_id,lambda\n0,abc\n")
    with pytest.raises(ParseError):
        load_prices(path)


def test_make_periods_length_check(day):
    with pytest.raises(LengthMismatch):
        make_periods([p.signal for p in day], [1.0])


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 10), st.floats(0, 200), st.floats(0.35, 0.99))
def test_accounting_identity(seed, C, price, rho):
    r = np.clip(np.random.default_rng(seed).normal(0, 0.5, 300), -1, 1)
    sig = RegulationSignal(r)
    params = dataclasses.replace(PARAMS, rho_min=rho)
    tr = run_policy(sig, C, SPEC, PEN)
    res = settle_period(MarketPeriod(0, price, sig, C), tr, params)
    assert res.profit == res.payment - res.aging_cost
    assert identity_holds(res)
    if res.eligible:
        assert res.payment == pytest.approx(res.perf_index * price * C)
    else:
        assert res.payment == 0.0
