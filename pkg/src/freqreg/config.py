"""Run configuration: an INI-style file with one section per concern.

Every key has a default, so an empty file (or none at all) is a valid
configuration describing the 10 MW / 3 MWh reference battery.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field

from .battery import BatterySpec
from .errors import ConfigError
from .params import MarketParams

REFERENCE_CASES = "50:1.0:100, 100:1.0:100, 200:1.0:100, 50:0.92:100, 50:0.92:200"

DEFAULTS = {
    "battery": {},
    "market": {
        "delta": "0.6666666666666666",
        "rho_min": "0.7",
        "xi": "0.9",
        "interval_seconds": "2",
        "period_hours": "1",
        "mu_r": "auto",
        "mu_lambda": "30",
        "mu_lambda_source": "trailing",
        "trailing_window": "168",
    },
    "corpus": {
        "signal_csv": "",
        "kind": "ou-process",
        "seed": "2016",
        "n_periods": "8760",
        "tau_s": "300",
        "sigma": "0.45",
        "debias": "true",
        "price_csv": "",
        "price_seed": "2017",
        "price_mean": "30",
        "price_cv": "0.4",
    },
    "calibration": {
        "signal_csv": "",
        "kind": "ou-process",
        "seed": "2013",
        "n_periods": "1000",
        "tau_s": "300",
        "sigma": "0.45",
        "debias": "true",
        "gamma_max": "1.0",
        "gamma_steps": "201",
        "xis": "",
    },
    "uhat": {"energy_mwh": "1.0", "cases": REFERENCE_CASES},
    "simulate": {"capacity_mw": "10", "periods": "1", "mu_lambda": ""},
    "bid": {"segments": "1,1,1,1,1,1,1,1,1,1", "gamma_curve": ""},
    "backtest": {"policy": "proposed", "bidding": "fixed", "capacity_mw": "10",
                 "enforce_eligibility": "true"},
    "sweep": {"capacities": "1,2,3,4,5,6,7,8,9,10"},
}


@dataclass
class RunConfig:
    battery: BatterySpec
    market: MarketParams
    sections: dict = field(default_factory=dict)
    mu_r_auto: bool = True

    def get(self, section: str, key: str) -> str:
        return self.sections[section][key]

    def number(self, section: str, key: str, cast=float):
        raw = self.sections[section][key]
        try:
            return cast(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected {cast.__name__}, got {raw!r}") from None

    def flag(self, section: str, key: str) -> bool:
        raw = self.sections[section][key].strip().lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{section}.{key}: expected a boolean, got {raw!r}")

    def numbers(self, section: str, key: str) -> list[float]:
        raw = self.sections[section][key]
        try:
            return [float(x) for x in raw.replace(";", ",").split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected a comma-separated list") from None

    def apply_seed(self, seed: int | None) -> None:
        """``--seed`` overrides the corpus, price and calibration seeds."""
        if seed is None:
            return
        self.sections["corpus"]["seed"] = str(seed)
        self.sections["corpus"]["price_seed"] = str(seed + 1)
        self.sections["calibration"]["seed"] = str(seed + 2)

    def digest(self) -> str:
        payload = {"battery": asdict(self.battery), "sections": self.sections}
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path=None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"config syntax: {exc}") from None
    unknown = set(parser.sections()) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    sections = {}
    for name, defaults in DEFAULTS.items():
        given = dict(parser[name]) if parser.has_section(name) else {}
        if name != "battery":
            extra = set(given) - set(defaults)
            if extra:
                raise ConfigError(f"{name}: unknown keys {sorted(extra)}")
        sections[name] = {**defaults, **given}
    battery = BatterySpec.from_config(sections["battery"])
    m = sections["market"]

    def num(key, cast=float):
        try:
            return cast(m[key])
        except ValueError:
            raise ConfigError(f"market.{key}: expected {cast.__name__}, got {m[key]!r}") from None

    auto = m["mu_r"].strip().lower() == "auto"
    market = MarketParams(
        delta=num("delta"), rho_min=num("rho_min"), xi=num("xi"),
        interval=num("interval_seconds") / 3600.0, period_hours=num("period_hours"),
        mu_r=1.0 if auto else num("mu_r"), mu_lambda=num("mu_lambda"),
        mu_lambda_source=m["mu_lambda_source"].strip(),
        trailing_window=num("trailing_window", int))
    return RunConfig(battery, market, sections, auto)
