"""Plant evaluation: surfaces, ballast and one optimal control solve per wind bin, folded into AEP."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from fowtccd.ccd.design import PlantDesign
from fowtccd.environment.wind import HOURS_PER_YEAR, WindBinSet
from fowtccd.errors import FowtCcdError
from fowtccd.mixins.logger import LoggerMixin
from fowtccd.oloc.ipm import OPTIMAL
from fowtccd.oloc.solution import solve_oloc
from fowtccd.workbench import Workbench

PENALISED = "penalised"


@dataclass
class AepResult:
    P_out: List[float]
    probabilities: List[float]
    statuses: List[str]
    objective: float
    penalised: bool = False
    reason: Optional[str] = None
    tower_mass: float = float("nan")
    platform_mass: float = float("nan")
    wind_speeds: List[float] = field(default_factory=list)

    @property
    def E_in(self) -> float:
        return float(np.dot(self.probabilities, self.P_out)) if self.P_out else 0.0

    @property
    def AEP(self) -> float:
        """Annual energy [Wh]."""
        return HOURS_PER_YEAR * self.E_in

    @property
    def J_out(self) -> float:
        return -self.AEP

    def as_dict(self) -> Dict:
        return {
            "AEP": self.AEP,
            "E_in": self.E_in,
            "objective": self.objective,
            "penalised": self.penalised,
            "reason": self.reason,
            "tower_mass": self.tower_mass,
            "platform_mass": self.platform_mass,
            "statuses": ";".join(self.statuses),
        }


def aep_from_powers(P_out, probabilities) -> float:
    return HOURS_PER_YEAR * float(np.dot(probabilities, P_out))


class PlantEvaluator(LoggerMixin):
    """Total function from plant designs to AEP results.

    Designs that cannot be built or whose bins fail to solve get a large finite
    objective instead of raising, so the evolution strategy always has a value.
    """

    def __init__(self, workbench: Workbench, bins: Optional[WindBinSet] = None, penalty: Optional[float] = None, log_file: str = "ccd.log"):
        super().__init__(log_file)
        self.workbench = workbench
        settings = workbench.settings
        self.bins = bins if bins is not None else workbench.bins(settings.ccd.bins)
        self.penalty = settings.ccd.penalty if penalty is None else penalty
        self.oloc = settings.oloc

    def penalised(self, reason: str, statuses: List[str], **extra) -> AepResult:
        self.log_warning(f"Design penalised: {reason}")
        return AepResult(
            P_out=[],
            probabilities=[],
            statuses=statuses,
            objective=self.penalty,
            penalised=True,
            reason=reason,
            **extra,
        )

    def __call__(self, design: PlantDesign) -> AepResult:
        return self.evaluate(design)

    def evaluate(self, design: PlantDesign, check_bounds: bool = True) -> AepResult:
        params = self.workbench.params
        try:
            if check_bounds:
                design.validate(params)
            plant = self.workbench.plant(design.tower, design.blade)
        except FowtCcdError as e:
            self.log_error(f"Plant assembly failed for {design.as_dict(params)}: {e}")
            return self.penalised(f"{type(e).__name__}: {e}", [PENALISED])

        masses = {"tower_mass": plant.tower_props.mass, "platform_mass": plant.inventory.m_p}
        powers, statuses, speeds = [], [], []
        for j, (u_bar, _) in enumerate(self.bins):
            u_hub = self.workbench.hub_wind(u_bar, design.tower.l)
            try:
                solution = solve_oloc(
                    plant,
                    u_hub,
                    self.oloc,
                    wind=self.workbench.wind(u_hub, index=j),
                    waves=self.workbench.waves(plant),
                    logger=self.logger,
                )
            except FowtCcdError as e:
                self.log_failure(e, f"Bin {u_bar:g} m/s failed")
                return self.penalised(f"bin {u_bar:g}: {type(e).__name__}", statuses + ["error"], **masses)
            statuses.append(solution.status)
            speeds.append(u_hub)
            if solution.status != OPTIMAL and not solution.feasibility.feasible:
                return self.penalised(f"bin {u_bar:g}: {solution.status}", statuses, **masses)
            powers.append(solution.P_out)
            self.log_debug(f"bin {u_bar:g} m/s (hub {u_hub:.3f}): P_out={solution.P_out:.6e} status={solution.status}")

        result = AepResult(
            P_out=powers,
            probabilities=self.bins.probabilities.tolist(),
            statuses=statuses,
            objective=0.0,
            wind_speeds=speeds,
            **masses,
        )
        result.objective = result.J_out
        self.log_info(f"Design {design.as_dict(params)}: AEP={result.AEP / 1e9:.4f} GWh")
        return result


def evaluate_plant(design: PlantDesign, workbench: Workbench, bins: Optional[WindBinSet] = None) -> AepResult:
    return PlantEvaluator(workbench, bins=bins).evaluate(design)
