import csv
import json
import subprocess
import sys

import pytest

from freqreg import __version__
from freqreg.cli import main
from freqreg.config import load_config

SMALL = """
[corpus]
n_periods = 6
[calibration]
n_periods = 200
gamma_steps = 21
gamma_max = 0.4
[sweep]
capacities = 0, 5
"""


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return path


def data_rows(path):
    return list(csv.reader(l for l in path.read_text().splitlines() if not l.startswith("#")))


def test_uhat_runs_without_arguments(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(["uhat"]) == 0
    out = capsys.readouterr().out
    assert "u_hat%" in out
    rows = data_rows(tmp_path / "uhat.csv")
    assert rows[0] == ["case", "pi_per_mwh", "eta_pct", "T", "u_hat_pct", "regret_bound"]
    u = [float(r[4]) for r in rows[1:]]
    for got, want in zip(u, [11.1, 21.9, 42.8, 11.2, 11.2]):
        assert abs(got - want) <= 0.2
    eps = [float(r[5]) for r in rows[1:]]
    assert eps[:3] == [0.0, 0.0, 0.0] and 0.03 < eps[3] < 0.1


def test_every_output_has_header(tmp_path, small):
    for cmd in ("uhat", "calibrate", "bid", "backtest", "sweep", "simulate"):
        out = tmp_path / cmd
        assert main(["--config", str(small), "--out", str(out), cmd]) == 0
        for f in out.glob("*.csv"):
            first = f.read_text().splitlines()[0]
            assert first.startswith(f"# freqreg {__version__} command={cmd} config_sha256="), f


def test_flags_after_subcommand(tmp_path, small):
    assert main(["calibrate", "--config", str(small), "--out", str(tmp_path), "--seed", "3"]) == 0
    assert (tmp_path / "gamma_curve_xi0.9.csv").exists()


def test_calibrate_is_deterministic(tmp_path, small):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--config", str(small), "--seed", "9", "--out", str(a), "calibrate"]) == 0
    assert main(["--config", str(small), "--seed", "9", "--out", str(b), "calibrate"]) == 0
    assert (a / "gamma_curve_xi0.9.csv").read_bytes() == (b / "gamma_curve_xi0.9.csv").read_bytes()


def test_seed_changes_corpus(tmp_path, small):
    assert main(["--config", str(small), "--seed", "1", "--out", str(tmp_path / "a"), "calibrate"]) == 0
    assert main(["--config", str(small), "--seed", "2", "--out", str(tmp_path / "b"), "calibrate"]) == 0
    assert ((tmp_path / "a" / "gamma_curve_xi0.9.csv").read_bytes()
            != (tmp_path / "b" / "gamma_curve_xi0.9.csv").read_bytes())


def test_bid_segments(tmp_path, small):
    assert main(["--config", str(small), "--out", str(tmp_path), "bid"]) == 0
    rows = data_rows(tmp_path / "bid_curve.csv")
    assert rows[0] == ["segment", "price_per_mw", "capacity_mw"]
    prices = [float(r[1]) for r in rows[1:]]
    assert 1 <= len(prices) <= 10
    assert all(a <= b for a, b in zip(prices, prices[1:]))


def test_backtest_outputs(tmp_path, small):
    assert main(["--config", str(small), "--out", str(tmp_path), "backtest"]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["periods"] == 6 and summary["total_capacity_mwh"] == 60
    rows = data_rows(tmp_path / "report.csv")
    assert len(rows) == 7


def test_backtest_with_bid_curve(tmp_path, small):
    text = small.read_text() + "[backtest]\nbidding = bid-curve\n"
    small.write_text(text)
    assert main(["--config", str(small), "--out", str(tmp_path), "backtest"]) == 0


def test_bad_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[market]\nrho_min = 0.1\n")
    assert main(["--config", str(bad), "uhat"]) == 2
    assert "market.rho_min" in capsys.readouterr().err
    bad.write_text("[battery]\nefficiency = lots\n")
    assert main(["--config", str(bad), "uhat"]) == 2
    assert "battery.efficiency" in capsys.readouterr().err
    bad.write_text("[nonsense]\nx = 1\n")
    assert main(["--config", str(bad), "uhat"]) == 2
    assert main(["--config", str(tmp_path / "missing.ini"), "uhat"]) == 2


def test_data_error_exit_code(tmp_path):
    cfg = tmp_path / "c.ini"
    bad_csv = tmp_path / "sig.csv"
    bad_csv.write_text("timestamp,r\n0,0.1\n2,oops\n")
    cfg.write_text(f"[corpus]\nsignal_csv = {bad_csv}\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path), "backtest"]) == 3


def test_infeasible_exit_code(tmp_path, small):
    small.write_text(SMALL + "[bid]\nsegments = 40\n")
    assert main(["--config", str(small), "--out", str(tmp_path), "bid"]) == 4


def test_config_digest_tracks_content(small):
    a = load_config(small)
    b = load_config(small)
    assert a.digest() == b.digest()
    b.apply_seed(4)
    assert a.digest() != b.digest()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "freqreg", "--out", str(tmp_path), "uhat"],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
