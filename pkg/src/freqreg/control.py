"""Online regulation response policies and their offline comparator.

The threshold policy follows the instruction until the spread between the
running maximum and minimum energy reaches ``u_hat * E``, then truncates the
response at the active bound. ``u_hat`` balances marginal mismatch penalty
against marginal cycle aging. The simple benchmark is the same policy with
``u_hat = 1``.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numba
import numpy as np

from .battery import BatterySpec, BatteryState, clamp_dispatch, step
from .errors import ConfigError, InstanceTooLarge, InvalidDispatch, SignalEmpty
from .performance import linear_index
from .rainflow import aging_cost_many, life_loss, phi_derivative_inverse, stress


@dataclass(frozen=True)
class PenaltyModel:
    """Expected-value penalty for not following the instruction.

    ``penalty_pi`` ($/MWh) is derived, so it always reflects the inputs.
    """

    delta: float
    mu_lambda: float
    mu_r: float
    interval: float

    def __post_init__(self):
        if not self.mu_r > 0:
            raise ConfigError("mu_r must be > 0")
        if not self.interval > 0:
            raise ConfigError("interval must be > 0")
        if self.mu_lambda < 0 or not 0 <= self.delta <= 1:
            raise ConfigError("need mu_lambda >= 0 and delta in [0, 1]")

    @property
    def penalty_pi(self) -> float:
        return self.delta * self.mu_lambda / (self.mu_r * self.interval)

    @classmethod
    def from_pi(cls, pi: float, interval: float) -> "PenaltyModel":
        """Penalty model with a given price ``pi`` ($/MWh)."""
        return cls(delta=1.0, mu_lambda=pi * interval, mu_r=1.0, interval=interval)


def threshold_depth(pi: float, spec: BatterySpec) -> float:
    eta = spec.efficiency
    return phi_derivative_inverse((eta * eta + 1) / (eta * spec.replacement_cost) * pi, spec)


def optimal_cycle_depth(penalty: PenaltyModel, spec: BatterySpec) -> float:
    """Cycle depth at which marginal aging equals the marginal penalty saved."""
    return threshold_depth(penalty.penalty_pi, spec)


def regret_bound(penalty: PenaltyModel, spec: BatterySpec) -> float:
    """Worst-case gap ($) between the threshold policy and the offline optimum.

    The gap comes from the rainflow residue: at most two discharging half
    cycles and one charging half cycle that an offline controller could size
    individually. ``j_v`` and ``j_w`` are the values of charging and
    discharging half cycles; ``v_hat`` and ``w_hat`` their maximizers.
    """
    pi = penalty.penalty_pi
    eta = spec.efficiency
    R = spec.replacement_cost
    E = spec.energy_capacity

    def j_v(v):
        return pi * E * v / eta - 0.5 * E * R * stress(v, spec)

    def j_w(w):
        return eta * pi * E * w - 0.5 * E * R * stress(w, spec)

    u_hat = optimal_cycle_depth(penalty, spec)
    # same expression form as the threshold so the maximizers coincide at eta = 1
    v_hat = phi_derivative_inverse(2.0 / (eta * R) * pi, spec)
    w_hat = phi_derivative_inverse(2 * eta * eta / (eta * R) * pi, spec)
    # grouped so that coinciding maximizers cancel exactly
    eps = 2 * (j_w(w_hat) - j_w(u_hat)) + (j_v(v_hat) - j_v(u_hat))
    return max(eps, 0.0)


@dataclass
class ControlState:
    """Running energy marks and the bounds they induce; mutated in time order."""

    e_running_max: float
    e_running_min: float
    e_hi_g: float
    e_lo_g: float
    u_hat: float

    @classmethod
    def start(cls, e0: float, u_hat: float, spec: BatterySpec) -> "ControlState":
        state = cls(e0, e0, spec.e_max, spec.e_min, u_hat)
        state.observe(e0, spec)
        return state

    def observe(self, e: float, spec: BatterySpec) -> None:
        self.e_running_max = max(self.e_running_max, e)
        self.e_running_min = min(self.e_running_min, e)
        window = self.u_hat * spec.energy_capacity
        self.e_hi_g = min(spec.e_max, self.e_running_min + window)
        self.e_lo_g = max(spec.e_min, self.e_running_max - window)


def policy_step(state: ControlState, battery: BatteryState, instruction: float,
                spec: BatterySpec, interval: float) -> tuple[float, BatteryState]:
    """One control interval: update marks, clamp the instruction, move the battery."""
    state.observe(battery.energy, spec)
    b = clamp_dispatch(battery, instruction, (state.e_lo_g, state.e_hi_g), interval, spec)
    return b, step(battery, b, interval, spec)


@numba.njit(cache=True)
def _policy_kernel(instr, e0, e_lo, e_hi, window, interval, eta):
    n = instr.shape[0]
    b = np.empty(n)
    e = np.empty(n + 1)
    upper = np.empty(n)
    lower = np.empty(n)
    e[0] = e0
    run_max = e0
    run_min = e0
    for t in range(n):
        et = e[t]
        if et > run_max:
            run_max = et
        if et < run_min:
            run_min = et
        ub = min(e_hi, run_min + window)
        lb = max(e_lo, run_max - window)
        upper[t] = ub
        lower[t] = lb
        c = instr[t]
        if c >= 0:
            bt = max(0.0, min((ub - et) / (interval * eta), c))
            nxt = et + interval * eta * bt
        else:
            bt = min(0.0, max(eta * (lb - et) / interval, c))
            nxt = et + interval * bt / eta
        b[t] = bt
        # float round-off at the active bound
        e[t + 1] = min(max(nxt, min(lb, et)), max(ub, et))
    return b, e, upper, lower


def simulate_dispatch(instruction: np.ndarray, e0: float, e_lo: float, e_hi: float,
                      window: float, interval: float, eta: float):
    """Vectorised threshold policy. Returns ``(b, e, upper, lower)``; ``e`` has n+1 entries."""
    instr = np.ascontiguousarray(instruction, dtype=float)
    return _policy_kernel(instr, float(e0), float(e_lo), float(e_hi), float(window),
                          float(interval), float(eta))


@dataclass
class Trajectory:
    """Outcome of running a policy over one signal period."""

    r: np.ndarray
    instruction: np.ndarray
    dispatch: np.ndarray
    energy: np.ndarray  # n+1 entries, energy[0] = e0
    upper: np.ndarray
    lower: np.ndarray
    capacity: float
    u_hat: float
    penalty_pi: float
    interval: float
    delta: float
    energy_capacity: float
    aging_cost: float
    life_loss: float
    price: float | None = None
    mismatch: float = field(init=False)

    def __post_init__(self):
        self.mismatch = float(np.abs(self.instruction - self.dispatch).sum())

    def __len__(self):
        return self.dispatch.size

    @property
    def instructed(self) -> float:
        return float(np.abs(self.instruction).sum())

    @property
    def penalty_cost(self) -> float:
        return self.penalty_pi * self.interval * self.mismatch

    @property
    def objective(self) -> float:
        """Policy cost: penalty on mismatched energy plus aging."""
        return self.penalty_cost + self.aging_cost

    @property
    def perf_index(self) -> float:
        return linear_index(self.mismatch, self.instructed, self.delta)

    @property
    def soc(self) -> np.ndarray:
        return self.energy / self.energy_capacity

    @property
    def profit(self) -> float | None:
        if self.price is None:
            return None
        return self.perf_index * self.price * self.capacity - self.aging_cost

    def to_csv(self, path) -> None:
        """Columns ``t,r,instruction_mw,dispatch_mw,soc,E_hi_g,E_lo_g``.

        ``soc`` is the fraction after the interval's dispatch; bounds in MWh.
        """
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "r", "instruction_mw", "dispatch_mw", "soc", "E_hi_g", "E_lo_g"])
            soc = self.soc
            for t in range(len(self)):
                w.writerow([t, repr(float(self.r[t])), repr(float(self.instruction[t])),
                            repr(float(self.dispatch[t])), repr(float(soc[t + 1])),
                            repr(float(self.upper[t])), repr(float(self.lower[t]))])


def run_policy(signal, capacity: float, spec: BatterySpec, penalty: PenaltyModel,
               e0: float | None = None, *, u_hat: float | None = None,
               price: float | None = None, simple: bool = False) -> Trajectory:
    """Run the threshold policy (or the simple benchmark) over one signal period.

    ``signal`` is a ``RegulationSignal`` or an array of normalized samples.
    ``u_hat`` overrides the penalty-derived threshold; ``simple`` forces 1.
    """
    r = np.asarray(getattr(signal, "samples", signal), dtype=float)
    if r.size == 0:
        raise SignalEmpty("signal has no samples")
    if not 0 <= capacity <= spec.power_rating:
        raise InvalidDispatch(f"capacity {capacity:g} MW outside [0, {spec.power_rating:g}]")
    if e0 is None:
        e0 = spec.midpoint
    if simple:
        u_hat = 1.0
    elif u_hat is None:
        u_hat = optimal_cycle_depth(penalty, spec)
    instr = capacity * r
    b, e, upper, lower = simulate_dispatch(
        instr, e0, spec.e_min, spec.e_max, u_hat * spec.energy_capacity,
        penalty.interval, spec.efficiency)
    loss = life_loss(e / spec.energy_capacity, spec)
    return Trajectory(
        r=r, instruction=instr, dispatch=b, energy=e, upper=upper, lower=lower,
        capacity=float(capacity), u_hat=float(u_hat), penalty_pi=penalty.penalty_pi,
        interval=penalty.interval, delta=penalty.delta,
        energy_capacity=spec.energy_capacity,
        aging_cost=spec.energy_capacity * spec.replacement_cost * loss,
        life_loss=loss, price=price)


def run_policy_stepwise(signal, capacity, spec, penalty, e0=None, *, u_hat=None):
    """Reference loop over ``policy_step``; returns ``(dispatch, energy)``."""
    r = np.asarray(getattr(signal, "samples", signal), dtype=float)
    if e0 is None:
        e0 = spec.midpoint
    if u_hat is None:
        u_hat = optimal_cycle_depth(penalty, spec)
    state = ControlState.start(e0, u_hat, spec)
    battery = BatteryState(e0)
    b, e = [], [e0]
    for x in r:
        bt, battery = policy_step(state, battery, capacity * x, spec, penalty.interval)
        b.append(bt)
        e.append(battery.energy)
    return np.array(b), np.array(e)


@dataclass
class OracleResult:
    cost: float
    dispatch: np.ndarray
    paths_evaluated: int


def offline_oracle(signal, capacity: float, spec: BatterySpec, penalty: PenaltyModel,
                   e0: float | None = None, quantization: int = 5, max_T: int = 8,
                   budget: int = 10**6, extra_paths=()) -> OracleResult:
    """Exhaustive minimum of penalty + aging over quantized dispatch paths.

    At each step the dispatch is one of ``quantization`` evenly spaced levels
    between 0 and the instruction, so it never exceeds the instruction.
    Aging is evaluated by full rainflow on every complete feasible path.
    ``extra_paths`` are additional candidate dispatch sequences.
    """
    r = np.asarray(getattr(signal, "samples", signal), dtype=float)
    T = r.size
    if T == 0:
        raise SignalEmpty("signal has no samples")
    if T > max_T:
        raise InstanceTooLarge(f"T={T} exceeds max_T={max_T}")
    if quantization < 2:
        raise ConfigError("quantization must be >= 2")
    if quantization ** T > budget:
        raise InstanceTooLarge(f"{quantization}^{T} paths exceed budget {budget}")
    if e0 is None:
        e0 = spec.midpoint
    instr = capacity * r
    levels = np.linspace(0.0, 1.0, quantization)
    idx = np.array(list(itertools.product(range(quantization), repeat=T)), dtype=np.intp)
    b = levels[idx] * instr
    extra = [np.asarray(p, dtype=float) for p in extra_paths]
    if extra:
        b = np.vstack([b] + [p.reshape(1, T) for p in extra])
    eta, M = spec.efficiency, penalty.interval
    de = np.where(b >= 0, M * eta * b, M * b / eta)
    e = e0 + np.cumsum(de, axis=1)
    ok = np.all((e >= spec.e_min - 1e-9) & (e <= spec.e_max + 1e-9), axis=1)
    ok &= np.all(np.abs(b) <= spec.power_rating + 1e-9, axis=1)
    b, e = b[ok], e[ok]
    soc = np.hstack([np.full((e.shape[0], 1), e0), e]) / spec.energy_capacity
    cost = (penalty.penalty_pi * M * np.abs(instr - b).sum(axis=1)
            + aging_cost_many(soc, spec))
    k = int(np.argmin(cost))
    return OracleResult(float(cost[k]), b[k].copy(), int(b.shape[0]))
