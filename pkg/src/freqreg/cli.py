"""Command-line front end.

    freqreg [--config PATH] [--seed N] [--out DIR] {uhat,simulate,calibrate,bid,backtest,sweep}

Exit codes: 0 success, 2 configuration error, 3 data error, 4 infeasible
experiment.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bidding import build_bid_curve, calibrate_gamma_curves, GammaCurve
from .config import RunConfig, load_config
from .control import PenaltyModel, optimal_cycle_depth, regret_bound, run_policy
from .errors import ConfigError, DataError, InfeasibleError
from .market import (Strategy, backtest, capacity_sweep, load_prices, make_periods,
                     synthesize_prices)
from .signal import load_csv, mu_r, synthesize_corpus

log = logging.getLogger("freqreg")

EXIT_CONFIG, EXIT_DATA, EXIT_INFEASIBLE = 2, 3, 4


def _header(cfg: RunConfig, command: str) -> list[str]:
    return [f"freqreg {__version__} command={command} config_sha256={cfg.digest()}"]


def _write_rows(path: Path, header_lines, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)


def _signals(cfg: RunConfig, section: str, n_periods: int | None = None):
    s = cfg.sections[section]
    m = cfg.market
    if s["signal_csv"].strip():
        signals = load_csv(s["signal_csv"].strip(), m.interval, m.period_hours)
        if n_periods is not None:
            signals = signals[:n_periods]
        return signals, {"source": s["signal_csv"].strip(), "n_periods": len(signals)}
    n = n_periods if n_periods is not None else cfg.number(section, "n_periods", int)
    debias = cfg.battery.efficiency if cfg.flag(section, "debias") else None
    return synthesize_corpus(
        s["kind"].strip(), cfg.number(section, "seed", int), n,
        {"tau_s": cfg.number(section, "tau_s"), "sigma": cfg.number(section, "sigma")},
        m.interval, m.period_hours, debias)


def _corpus_id(manifest: dict) -> str:
    if "source" in manifest:
        return Path(manifest["source"]).name
    return f"{manifest['kind']}-seed{manifest['seed']}-n{manifest['n_periods']}"


def _market(cfg: RunConfig, calibration=None):
    """Market parameters with ``mu_r`` resolved from the calibration corpus when 'auto'."""
    if not cfg.mu_r_auto:
        return cfg.market
    if calibration is None:
        calibration, _ = _signals(cfg, "calibration")
    return dataclasses.replace(cfg.market, mu_r=mu_r(calibration))


def _prices(cfg: RunConfig, n: int) -> np.ndarray:
    s = cfg.sections["corpus"]
    if s["price_csv"].strip():
        prices = load_prices(s["price_csv"].strip())
        if len(prices) < n:
            raise DataError(f"{len(prices)} prices for {n} periods")
        return np.array(prices[:n])
    return synthesize_prices(cfg.number("corpus", "price_seed", int), n,
                             cfg.number("corpus", "price_mean"), cfg.number("corpus", "price_cv"))


def _curves(cfg: RunConfig, xis):
    signals, manifest = _signals(cfg, "calibration")
    steps = cfg.number("calibration", "gamma_steps", int)
    if steps < 2:
        raise ConfigError("calibration.gamma_steps must be >= 2")
    grid = np.linspace(0.0, cfg.number("calibration", "gamma_max"), steps)
    curves = calibrate_gamma_curves(signals, xis, cfg.market.delta, grid,
                                    cfg.battery.efficiency, _corpus_id(manifest))
    return curves, signals


def cmd_uhat(cfg: RunConfig, out: Path) -> int:
    energy = cfg.number("uhat", "energy_mwh")
    rows = []
    for k, case in enumerate(cfg.get("uhat", "cases").split(","), start=1):
        try:
            pi, eta, T = (float(x) for x in case.strip().split(":"))
        except ValueError:
            raise ConfigError(f"uhat.cases: bad case {case.strip()!r}, want pi:eta:T") from None
        spec = dataclasses.replace(cfg.battery, efficiency=eta, energy_capacity=energy,
                                   e_max=min(cfg.battery.e_max, energy),
                                   e_min=min(cfg.battery.e_min, 0.1 * energy))
        pen = PenaltyModel.from_pi(pi, cfg.market.interval)
        rows.append([k, pi, eta * 100, int(T), optimal_cycle_depth(pen, spec) * 100,
                     regret_bound(pen, spec)])
    cols = ["case", "pi_per_mwh", "eta_pct", "T", "u_hat_pct", "regret_bound"]
    print(f"{'case':>4} {'pi':>7} {'eta%':>6} {'T':>5} {'u_hat%':>7} {'eps$':>8}")
    for c, pi, eta, T, u, eps in rows:
        print(f"{c:>4} {pi:>7.1f} {eta:>6.1f} {T:>5} {u:>7.1f} {eps:>8.2f}")
    _write_rows(out / "uhat.csv", _header(cfg, "uhat"), cols,
                [[c, repr(pi), repr(eta), T, repr(u), repr(e)] for c, pi, eta, T, u, e in rows])
    return 0


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    n = cfg.number("simulate", "periods", int)
    signals, _ = _signals(cfg, "corpus", n)
    market = _market(cfg)
    mu_lambda = (cfg.number("simulate", "mu_lambda") if cfg.get("simulate", "mu_lambda").strip()
                 else market.mu_lambda)
    pen = PenaltyModel(market.delta, mu_lambda, market.mu_r, market.interval)
    C = cfg.number("simulate", "capacity_mw")
    rows = []
    for policy in ("proposed", "simple"):
        e = cfg.battery.midpoint
        for sig in signals:
            tr = run_policy(sig, C, cfg.battery, pen, e, simple=policy == "simple")
            e = float(tr.energy[-1])
            path = out / f"trajectory_{policy}_{sig.period_id}.csv"
            tr.to_csv(path)
            _prepend(path, _header(cfg, "simulate"))
            rows.append([policy, sig.period_id, repr(tr.u_hat), repr(tr.perf_index),
                         repr(tr.penalty_cost), repr(tr.aging_cost), repr(tr.objective)])
    _write_rows(out / "simulate_summary.csv", _header(cfg, "simulate"),
                ["policy", "period_id", "u_hat", "perf_index", "penalty_cost", "aging_cost",
                 "objective"], rows)
    print(f"wrote {len(rows)} trajectories to {out}")
    return 0


def _prepend(path: Path, lines) -> None:
    body = path.read_text()
    path.write_text("".join(f"# {l}\n" for l in lines) + body)


def _xis(cfg: RunConfig) -> list[float]:
    xis = cfg.numbers("calibration", "xis") or [cfg.market.xi]
    for xi in xis:
        if not 0 < xi < 1:
            raise ConfigError(f"calibration.xis: {xi} not in (0, 1)")
    return xis


def cmd_calibrate(cfg: RunConfig, out: Path) -> int:
    curves, _ = _curves(cfg, _xis(cfg))
    for xi, curve in curves.items():
        path = out / f"gamma_curve_xi{xi:g}.csv"
        curve.to_csv(path, _header(cfg, "calibrate"))
        print(f"xi={xi:g}: wrote {path}")
    return 0


def _bid_curve(cfg: RunConfig, market):
    source = cfg.get("bid", "gamma_curve").strip()
    if source:
        curve = GammaCurve.from_csv(source)
    else:
        curve = _curves(cfg, [market.xi])[0][market.xi]
    return build_bid_curve(cfg.numbers("bid", "segments"), cfg.battery, market, curve)


def cmd_bid(cfg: RunConfig, out: Path) -> int:
    market = _market(cfg)
    bids = _bid_curve(cfg, market)
    bids.to_csv(out / "bid_curve.csv", _header(cfg, "bid"))
    for j, (p, c) in enumerate(bids.segments, start=1):
        print(f"segment {j:>2}: {c:g} MW at ${p:.2f}/MW")
    return 0


def cmd_backtest(cfg: RunConfig, out: Path) -> int:
    signals, manifest = _signals(cfg, "corpus")
    prices = _prices(cfg, len(signals))
    market = _market(cfg)
    bidding = cfg.get("backtest", "bidding").strip()
    strategy = Strategy(
        policy=cfg.get("backtest", "policy").strip(), bidding=bidding,
        capacity=cfg.number("backtest", "capacity_mw"),
        bid_curve=_bid_curve(cfg, market) if bidding == "bid-curve" else None,
        enforce_eligibility=cfg.flag("backtest", "enforce_eligibility"))
    report = backtest(make_periods(signals, prices), strategy, cfg.battery, market)
    report.to_csv(out / "report.csv", _header(cfg, "backtest"))
    summary = report.summary_json(tool=f"freqreg {__version__}", config_sha256=cfg.digest(),
                                  corpus=_corpus_id(manifest))
    (out / "summary.json").write_text(summary + "\n")
    for key, value in report.summary.items():
        print(f"{key}={value}")
    return 0


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    signals, _ = _signals(cfg, "corpus")
    prices = _prices(cfg, len(signals))
    rows = capacity_sweep(make_periods(signals, prices), cfg.numbers("sweep", "capacities"),
                          cfg.battery, _market(cfg))
    cols = ["capacity_mw", "policy", "payment", "penalty_equiv", "aging", "profit"]
    _write_rows(out / "sweep.csv", _header(cfg, "sweep"), cols,
                [[repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols] for r in rows])
    for r in rows:
        print(f"C={r['capacity_mw']:>5g} {r['policy']:<8} profit={r['profit']:>14.2f}")
    return 0


COMMANDS = {
    "uhat": (cmd_uhat, "optimal cycle depth and regret bound per penalty case"),
    "simulate": (cmd_simulate, "trajectories of both policies on the corpus"),
    "calibrate": (cmd_calibrate, "confidence performance curve over gamma"),
    "bid": (cmd_bid, "segmented capacity offer curve"),
    "backtest": (cmd_backtest, "settle a strategy over the corpus"),
    "sweep": (cmd_sweep, "profit versus regulation capacity"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS)
    common.add_argument("--seed", metavar="N", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="freqreg", parents=[common],
                                     description="Battery regulation-market control and bidding.")
    parser.add_argument("--version", action="version", version=f"freqreg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(getattr(args, "config", None))
        cfg.apply_seed(getattr(args, "seed", None))
        out = Path(getattr(args, "out", "."))
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command][0](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible ({type(exc).__module__}.{type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DataError, OSError) as exc:
        print(f"data error ({type(exc).__module__}.{type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
