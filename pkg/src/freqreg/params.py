"""Market-side parameters shared by control, bidding and settlement."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError

TWO_SECONDS = 1.0 / 1800.0


@dataclass(frozen=True)
class MarketParams:
    """Market rules and signal statistics.

    ``mu_lambda`` is the fixed clearing-price forecast in $/MW per period;
    ``mu_lambda_source`` selects between that forecast and a trailing mean of
    realized prices over ``trailing_window`` periods.
    """

    delta: float = 2.0 / 3.0
    rho_min: float = 0.7
    xi: float = 0.9
    interval: float = TWO_SECONDS
    period_hours: float = 1.0
    mu_r: float = 600.0
    mu_lambda: float = 30.0
    mu_lambda_source: str = "trailing"
    trailing_window: int = 168

    def __post_init__(self):
        if not 0 <= self.delta <= 1:
            raise ConfigError("market.delta must be in [0, 1]")
        if not 1 - self.delta < self.rho_min < 1:
            raise ConfigError("market.rho_min must lie in (1 - delta, 1)")
        if not 0 < self.xi < 1:
            raise ConfigError("market.xi must be in (0, 1)")
        if not self.interval > 0 or not self.period_hours > 0:
            raise ConfigError("market.interval_hours and period_hours must be > 0")
        if not self.mu_r >= 0:
            raise ConfigError("market.mu_r must be >= 0")
        if self.mu_lambda_source not in ("fixed", "trailing"):
            raise ConfigError("market.mu_lambda_source must be 'fixed' or 'trailing'")
        if self.trailing_window < 1:
            raise ConfigError("market.trailing_window must be >= 1")

    @property
    def samples_per_period(self) -> int:
        return int(round(self.period_hours / self.interval))
