"""Battery energy storage model: parameters, state and SoC dynamics.

Sign convention: positive dispatch charges the battery.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BoundsViolation, ConfigError, InvalidDispatch

# absolute slack (MWh / MW) for float round-off at the bounds
ENERGY_TOL = 1e-9
POWER_TOL = 1e-9


@dataclass(frozen=True)
class BatterySpec:
    """Static battery parameters.

    Energies are MWh, power MW, ``replacement_cost`` in $/MWh of cell
    capacity. The cycle depth stress is ``stress_k * u**stress_alpha``.
    Defaults describe a 10 MW / 3 MWh NMC unit.
    """

    power_rating: float = 10.0
    energy_capacity: float = 3.0
    e_max: float = 0.95 * 3.0
    e_min: float = 0.10 * 3.0
    efficiency: float = 0.95
    replacement_cost: float = 300_000.0
    stress_k: float = 1.57e-3
    stress_alpha: float = 2.03

    def __post_init__(self):
        if not self.power_rating > 0:
            raise ConfigError("battery.power_mw must be > 0")
        if not self.energy_capacity > 0:
            raise ConfigError("battery.energy_mwh must be > 0")
        if not 0 <= self.e_min < self.e_max <= self.energy_capacity + ENERGY_TOL:
            raise ConfigError("battery: need 0 <= soc_min < soc_max <= 1")
        if not 0 < self.efficiency <= 1:
            raise ConfigError("battery.efficiency must be in (0, 1]")
        if not self.replacement_cost > 0:
            raise ConfigError("battery.replacement_cost_per_mwh must be > 0")
        if not self.stress_k > 0:
            raise ConfigError("battery.stress_k must be > 0")
        if not self.stress_alpha > 1:
            raise ConfigError("battery.stress_alpha must be > 1 (convex stress)")

    @classmethod
    def from_config(cls, section) -> "BatterySpec":
        """Build from a mapping using the config-file key names."""
        defaults = cls()
        known = {"power_mw", "energy_mwh", "soc_max", "soc_min", "efficiency",
                 "replacement_cost_per_mwh", "stress_k", "stress_alpha"}
        unknown = set(section) - known
        if unknown:
            raise ConfigError(f"battery: unknown keys {sorted(unknown)}")

        def get(key, default):
            try:
                return float(section.get(key, default))
            except (TypeError, ValueError):
                raise ConfigError(f"battery.{key}: not a number: {section.get(key)!r}")

        energy = get("energy_mwh", defaults.energy_capacity)
        return cls(
            power_rating=get("power_mw", defaults.power_rating),
            energy_capacity=energy,
            e_max=get("soc_max", 0.95) * energy,
            e_min=get("soc_min", 0.10) * energy,
            efficiency=get("efficiency", defaults.efficiency),
            replacement_cost=get("replacement_cost_per_mwh", defaults.replacement_cost),
            stress_k=get("stress_k", defaults.stress_k),
            stress_alpha=get("stress_alpha", defaults.stress_alpha),
        )

    @property
    def usable_energy(self) -> float:
        return self.e_max - self.e_min

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.e_min + self.e_max)


@dataclass(frozen=True)
class BatteryState:
    energy: float
    t: int = 0


def energy_delta(dispatch: float, interval: float, efficiency: float) -> float:
    if dispatch >= 0:
        return interval * efficiency * dispatch
    return interval * dispatch / efficiency


def step(state: BatteryState, dispatch: float, interval: float,
         spec: BatterySpec) -> BatteryState:
    """Advance one dispatch interval of ``interval`` hours."""
    if abs(dispatch) > spec.power_rating + POWER_TOL:
        raise InvalidDispatch(
            f"|b|={abs(dispatch):.6g} MW exceeds rating {spec.power_rating:g} MW")
    e = state.energy + energy_delta(dispatch, interval, spec.efficiency)
    if e > spec.e_max + ENERGY_TOL or e < spec.e_min - ENERGY_TOL:
        raise BoundsViolation(
            f"energy {e:.9g} MWh leaves [{spec.e_min:g}, {spec.e_max:g}] at t={state.t}")
    e = min(max(e, spec.e_min), spec.e_max)
    return BatteryState(e, state.t + 1)


def clamp_dispatch(state: BatteryState, requested: float, bounds: tuple[float, float],
                   interval: float, spec: BatterySpec) -> float:
    """Largest part of ``requested`` that keeps the energy inside ``bounds``."""
    lo, hi = bounds
    eta = spec.efficiency
    e = state.energy
    if requested >= 0:
        return max(0.0, min((hi - e) / (interval * eta), requested))
    return min(0.0, max(eta * (lo - e) / interval, requested))
