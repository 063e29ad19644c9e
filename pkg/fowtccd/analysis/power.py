"""Power curves from steady-wind optimal control solves, the stress-limit cross study and curve AEP."""

import math
from functools import partial
from typing import Callable, Dict, Iterable, Optional

import numpy as np
import pandas as pd

from fowtccd.environment.wind import HOURS_PER_YEAR, WindBinSet
from fowtccd.errors import FowtCcdError
from fowtccd.oloc.problem import steady_wind
from fowtccd.oloc.solution import solve_oloc
from fowtccd.settings import OlocConfig

POWER_CURVE_COLUMNS = ("u", "P_mean", "P_out", "status", "feasible", "flagged")
CURVE_SPEEDS = np.arange(3.0, 25.0 + 1e-9, 1.0)


def horizon_settings(oloc: OlocConfig, duration: float, sigma_max_mpa: Optional[float] = None) -> OlocConfig:
    """Same mesh density over a different horizon, optionally with another stress limit."""
    segments = max(1, int(math.ceil(oloc.segments * duration / (oloc.t_f - oloc.t_i))))
    update = {"t_f": oloc.t_i + duration, "segments": segments}
    if sigma_max_mpa is not None:
        update["sigma_max_mpa"] = sigma_max_mpa
    return oloc.model_copy(update=update)


def _power_point(u: float, plant, settings: OlocConfig, wind_factory: Optional[Callable], waves) -> Dict:
    duration = settings.t_f - settings.t_i
    wind = wind_factory(u) if wind_factory is not None else steady_wind(u, duration)
    try:
        solution = solve_oloc(plant, u, settings, wind=wind, waves=waves)
    except FowtCcdError as e:
        return {"u": u, "P_mean": np.nan, "P_out": np.nan, "status": type(e).__name__, "feasible": False, "flagged": True}
    feasible = solution.feasibility.feasible
    return {
        "u": u,
        "P_mean": solution.P_u_mean,
        "P_out": solution.P_out,
        "status": solution.status,
        "feasible": feasible,
        "flagged": not (solution.success or feasible),
    }


def power_curve(
    plant,
    oloc: OlocConfig,
    speeds: Iterable[float],
    sigma_max_mpa: Optional[float] = None,
    duration: float = 600.0,
    wind_factory: Optional[Callable] = None,
    waves=None,
    map_fn: Callable = map,
) -> pd.DataFrame:
    """Mean generator power per wind speed; failed points are kept and flagged."""
    settings = horizon_settings(oloc, duration, sigma_max_mpa)
    job = partial(_power_point, plant=plant, settings=settings, wind_factory=wind_factory, waves=waves)
    rows = list(map_fn(job, [float(u) for u in speeds]))
    return pd.DataFrame(rows, columns=list(POWER_CURVE_COLUMNS))


def curve_aep(curve: pd.DataFrame, bins: WindBinSet, hub_wind: Optional[Callable[[float], float]] = None) -> float:
    """AEP [Wh] of a power curve interpolated at the (shear adjusted) bin speeds."""
    valid = curve.dropna(subset=["P_mean"]).sort_values("u")
    if valid.empty:
        return float("nan")
    speeds = np.array([hub_wind(u) if hub_wind else u for u in bins.centers])
    powers = np.interp(speeds, valid["u"].to_numpy(), valid["P_mean"].to_numpy())
    return HOURS_PER_YEAR * float(np.dot(bins.probabilities, powers))


def cross_constraint_study(
    plants: Dict[float, object],
    oloc: OlocConfig,
    speeds: Iterable[float],
    simulate_limits: Iterable[float] = (45.0, 90.0),
    bins: Optional[WindBinSet] = None,
    hub_wind: Optional[Callable[[object, float], float]] = None,
    duration: float = 600.0,
    map_fn: Callable = map,
) -> Dict[str, pd.DataFrame]:
    """Power curves for every (design stress limit, simulation stress limit) pair.

    ``plants`` maps the stress limit a plant was designed for [MPa] to its plant model.
    Returns the long-format curves and, with bins, the AEP of every cell.
    """
    speeds = [float(u) for u in speeds]
    curves, cells = [], []
    for design_limit, plant in plants.items():
        for simulate_limit in simulate_limits:
            curve = power_curve(plant, oloc, speeds, simulate_limit, duration=duration, map_fn=map_fn)
            curve.insert(0, "simulate_sigma_mpa", simulate_limit)
            curve.insert(0, "design_sigma_mpa", design_limit)
            curves.append(curve)
            if bins is not None:
                shear = (lambda u, p=plant: hub_wind(p, u)) if hub_wind else None
                cells.append(
                    {
                        "design_sigma_mpa": design_limit,
                        "simulate_sigma_mpa": simulate_limit,
                        "AEP": curve_aep(curve, bins, shear),
                    }
                )
    out = {"curves": pd.concat(curves, ignore_index=True)}
    if bins is not None:
        out["aep"] = pd.DataFrame(cells)
    return out
