"""Battery control and capacity bidding for frequency regulation markets."""

__version__ = "0.1.0"

from .battery import BatterySpec, BatteryState, step
from .bidding import (BidCurve, GammaCurve, build_bid_curve, calibrate_gamma_curve,
                      inverse_gamma, optimal_capacity)
from .control import (PenaltyModel, Trajectory, offline_oracle, optimal_cycle_depth,
                      regret_bound, run_policy)
from .market import Strategy, backtest, settle_period
from .params import MarketParams
from .performance import performance_index
from .rainflow import aging_cost, rainflow, stress
from .signal import RegulationSignal, load_csv, save_csv, synthesize

__all__ = [
    "BatterySpec", "BatteryState", "BidCurve", "GammaCurve", "MarketParams", "PenaltyModel",
    "RegulationSignal", "Strategy", "Trajectory", "aging_cost", "backtest", "build_bid_curve",
    "calibrate_gamma_curve", "inverse_gamma", "load_csv", "offline_oracle", "optimal_capacity",
    "optimal_cycle_depth", "performance_index", "rainflow", "regret_bound", "run_policy",
    "save_csv", "settle_period", "step", "stress", "synthesize",
]
