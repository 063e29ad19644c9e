"""Rainflow counting, Miner damage and the tower strength needed for the design life."""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from fowtccd.errors import ArgumentError

SECONDS_PER_YEAR = 365.25 * 24 * 3600.0
CYCLE_COLUMNS = ("range", "mean", "count")


@dataclass(frozen=True)
class FatigueSpec:
    """Single-slope S-N curve N(S) = reference_cycles * (strength / S) ** exponent."""

    exponent: float = 4.0
    lifetime_years: float = 20.0
    reference_cycles: float = 2e6
    mean_stress: str = "none"
    availability: float = 1.0

    def __post_init__(self):
        if not self.exponent > 0 or not self.lifetime_years > 0 or not self.reference_cycles > 0:
            raise ArgumentError("Fatigue exponent, lifetime and reference cycles must be positive")
        if self.mean_stress not in ("none", "goodman"):
            raise ArgumentError("Unknown mean stress handling", details={"mean_stress": self.mean_stress})

    @classmethod
    def from_config(cls, config) -> "FatigueSpec":
        return cls(
            exponent=config.exponent,
            lifetime_years=config.lifetime_years,
            reference_cycles=config.reference_cycles,
            mean_stress=config.mean_stress,
            availability=config.availability,
        )


@dataclass(frozen=True)
class StrengthResult:
    strength: float  # Pa
    damage: float  # lifetime damage at that strength
    bounded: bool
    cycles: int


def turning_points(series) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ArgumentError("Rainflow needs a finite series")
    if x.size < 2:
        return x
    x = x[np.concatenate([[True], np.diff(x) != 0])]
    if x.size < 3:
        return x
    d = np.diff(x)
    keep = np.concatenate([[True], d[1:] * d[:-1] < 0, [True]])
    return x[keep]


def rainflow(series) -> pd.DataFrame:
    """Cycles (range, mean, count) by the stack form of rainflow counting; residue counts as half cycles."""
    stack: List[float] = []
    cycles = []
    for point in turning_points(series):
        stack.append(point)
        while len(stack) >= 3:
            X = abs(stack[-1] - stack[-2])
            Y = abs(stack[-2] - stack[-3])
            if X < Y:
                break
            if len(stack) == 3:
                cycles.append((Y, 0.5 * (stack[0] + stack[1]), 0.5))
                stack.pop(0)
            else:
                cycles.append((Y, 0.5 * (stack[-2] + stack[-3]), 1.0))
                del stack[-3:-1]
    for a, b in zip(stack[:-1], stack[1:]):
        cycles.append((abs(b - a), 0.5 * (a + b), 0.5))
    return pd.DataFrame(cycles, columns=list(CYCLE_COLUMNS))


def _equivalent_ranges(cycles: pd.DataFrame, spec: FatigueSpec, strength: float) -> np.ndarray:
    ranges = cycles["range"].to_numpy(dtype=float)
    if spec.mean_stress == "goodman":
        ratio = np.abs(cycles["mean"].to_numpy(dtype=float)) / strength
        with np.errstate(divide="ignore"):
            return np.where(ratio < 1, ranges / (1 - ratio), np.inf)
    return ranges


def miner_damage(cycles: pd.DataFrame, spec: FatigueSpec, strength: float) -> float:
    """Linear damage sum of the counted cycles (no lifetime extrapolation)."""
    if not strength > 0:
        raise ArgumentError("Strength must be positive", details={"strength": strength})
    ranges = _equivalent_ranges(cycles, spec, strength)
    counts = cycles["count"].to_numpy(dtype=float)
    return float(np.sum(counts * (ranges / strength) ** spec.exponent) / spec.reference_cycles)


def lifetime_factor(duration: float, spec: FatigueSpec) -> float:
    if not duration > 0:
        raise ArgumentError("Stress series duration must be positive", details={"duration": duration})
    return spec.lifetime_years * SECONDS_PER_YEAR * spec.availability / duration


def fatigue_required_strength(t, stress, spec: FatigueSpec) -> StrengthResult:
    """Smallest strength whose extrapolated lifetime damage is one.

    Without cycles (a constant series) any strength survives; the result is flagged unbounded.
    """
    t = np.asarray(t, dtype=float)
    cycles = rainflow(stress)
    cycles = cycles[cycles["range"] > 0]
    factor = lifetime_factor(float(t[-1] - t[0]), spec)
    if cycles.empty:
        return StrengthResult(strength=0.0, damage=0.0, bounded=False, cycles=0)

    def excess(log_strength):
        # Goodman ranges are infinite once the mean reaches the strength
        damage = factor * miner_damage(cycles, spec, float(np.exp(log_strength)))
        return float(np.log(min(damage, 1e300)))

    peak = float(max(cycles["range"].max(), np.abs(cycles["mean"]).max()))
    lo, hi = np.log(peak * 1e-3), np.log(peak * 1e6)
    while excess(lo) < 0:
        lo -= np.log(10.0)
    while excess(hi) > 0:
        hi += np.log(10.0)
    log_strength = brentq(excess, lo, hi, xtol=1e-14, rtol=1e-12)
    strength = float(np.exp(log_strength))
    return StrengthResult(
        strength=strength,
        damage=factor * miner_damage(cycles, spec, strength),
        bounded=True,
        cycles=int(len(cycles)),
    )


def strength_table(series: dict, spec: FatigueSpec, t) -> pd.DataFrame:
    """Required strength per named stress series [MPa]."""
    rows = []
    for name, stress in series.items():
        result = fatigue_required_strength(t, stress, spec)
        rows.append(
            {
                "case": name,
                "required_strength_mpa": result.strength / 1e6,
                "lifetime_damage": result.damage,
                "bounded": result.bounded,
                "cycles": result.cycles,
                "max_stress_mpa": float(np.max(np.abs(stress))) / 1e6,
            }
        )
    return pd.DataFrame(rows)


def read_stress_series(path: str, column: Optional[str] = None):
    """(t, stress) from a CSV with a ``t`` column and a stress column (default ``sigma``)."""
    frame = pd.read_csv(path)
    column = column or ("sigma_signed" if "sigma_signed" in frame else "sigma")
    if "t" not in frame or column not in frame:
        raise ArgumentError("Stress series needs t and stress columns", details={"path": path, "columns": list(frame.columns)})
    return frame["t"].to_numpy(dtype=float), frame[column].to_numpy(dtype=float)
