"""Outer-loop driver: CMA-ES over plant designs, design history and comparison tables."""

import multiprocessing
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from fowtccd.ccd.cmaes import CmaResult, cmaes_run
from fowtccd.ccd.design import TOWER_VARIABLES, DesignSpace, PlantDesign
from fowtccd.ccd.evaluate import AepResult, PlantEvaluator
from fowtccd.errors import InvalidDesignError
from fowtccd.settings import ScenarioSettings
from fowtccd.workbench import Workbench

_WORKER_EVALUATOR: Optional[PlantEvaluator] = None


class DesignObjective:
    """Maps unit-cube points to AEP results; rebuilds its evaluator inside worker processes."""

    def __init__(self, space: DesignSpace, evaluator: PlantEvaluator, scenario: Tuple[str, Dict[str, str]]):
        self.space = space
        self.evaluator = evaluator
        self.scenario = scenario

    def __getstate__(self):
        state = self.__dict__.copy()
        state["evaluator"] = None
        return state

    def _evaluator(self) -> PlantEvaluator:
        global _WORKER_EVALUATOR
        if self.evaluator is not None:
            return self.evaluator
        if _WORKER_EVALUATOR is None:
            path, overrides = self.scenario
            _WORKER_EVALUATOR = PlantEvaluator(Workbench(ScenarioSettings(path, overrides)))
        return _WORKER_EVALUATOR

    def __call__(self, unit) -> AepResult:
        return self._evaluator().evaluate(self.space.design(unit))


@contextmanager
def population_map(workers: int):
    if workers <= 1:
        yield map
        return
    with multiprocessing.Pool(workers) as pool:
        yield pool.map


@dataclass
class CcdReport:
    mode: str
    best: PlantDesign
    best_result: AepResult
    baseline: PlantDesign
    baseline_result: AepResult
    status: str
    history: pd.DataFrame
    best_per_generation: List[float] = field(default_factory=list)

    @property
    def aep_gain(self) -> float:
        """Relative AEP gain of the optimum over the baseline [%]."""
        return 100.0 * (self.best_result.AEP - self.baseline_result.AEP) / self.baseline_result.AEP


def history_frame(space: DesignSpace, cma: CmaResult) -> pd.DataFrame:
    rows = []
    for row in cma.history:
        design = space.design(row["x"])
        result: AepResult = row["info"]
        record = {"generation": row["generation"], "member": row["member"]}
        record.update(design.as_dict(space.params))
        record.update(
            {
                "tower_mass": result.tower_mass,
                "platform_mass": result.platform_mass,
                "AEP": result.AEP if not result.penalised else np.nan,
                "objective": result.objective,
                "statuses": ";".join(result.statuses),
                "penalised": result.penalised,
                "bound_violation": row["bound_violation"],
            }
        )
        rows.append(record)
    return pd.DataFrame(rows)


def ccd_run(
    workbench: Workbench,
    mode: Optional[str] = None,
    seed: Optional[int] = None,
    generations: Optional[int] = None,
    population: Optional[int] = None,
    evaluator: Optional[PlantEvaluator] = None,
    overrides: Optional[Dict[str, str]] = None,
) -> CcdReport:
    """Optimise the plant for AEP with the evolution strategy, starting from the baseline."""
    config = workbench.settings.ccd
    mode = mode or config.mode
    seed = config.seed if seed is None else seed
    generations = config.generations if generations is None else generations
    population = population or config.population

    space = DesignSpace(workbench.params, mode)
    evaluator = evaluator or PlantEvaluator(workbench)
    objective = DesignObjective(space, evaluator, (workbench.settings.scenario_path, dict(overrides or {})))
    x0 = space.normalize(space.base.as_vector())

    with population_map(config.workers) as map_fn:
        cma = cmaes_run(
            objective,
            x0,
            config.sigma0,
            population=population,
            generations=generations,
            seed=seed,
            lower=np.zeros(space.dimension),
            upper=np.ones(space.dimension),
            map_fn=map_fn,
            value=lambda result: result.objective,
            tolfun=0.0,
            tolx=1e-8,
        )
    history = history_frame(space, cma)
    best_row = next(row for row in cma.history if np.array_equal(row["x"], cma.x))
    workbench.log_info(f"CCD finished ({cma.status}) after {cma.state.generation} generations; best objective {cma.f:.10g}")
    return CcdReport(
        mode=mode,
        best=space.design(cma.x),
        best_result=best_row["info"],
        baseline=space.base,
        baseline_result=cma.history[0]["info"],
        status=cma.status,
        history=history,
        best_per_generation=cma.best_per_generation,
    )


def comparison_table(report: CcdReport, params) -> pd.DataFrame:
    """Baseline and optimum side by side: design variables, tower mass, AEP and gain."""
    rows = []
    for case, design, result in (
        ("baseline", report.baseline, report.baseline_result),
        (report.mode, report.best, report.best_result),
    ):
        row = {"case": case}
        row.update(design.as_dict(params))
        row["tower_mass"] = result.tower_mass
        row["AEP_GWh"] = result.AEP / 1e9
        row["AEP_gain_pct"] = 100.0 * (result.AEP - report.baseline_result.AEP) / report.baseline_result.AEP
        rows.append(row)
    return pd.DataFrame(rows)


def generation_frame(report: CcdReport) -> pd.DataFrame:
    return pd.DataFrame(
        {"generation": np.arange(len(report.best_per_generation)), "best_objective": report.best_per_generation}
    )


def sensitivity_scan(
    design: PlantDesign,
    evaluate: Callable[[PlantDesign], AepResult],
    delta: float = 0.05,
    variables=TOWER_VARIABLES,
    reference: Optional[AepResult] = None,
) -> pd.DataFrame:
    """AEP change for +/- delta relative perturbations of each tower variable.

    ``dJ_rel`` is 100 (AEP - AEP*) / AEP*, so a negative value means the perturbed design
    produces less energy, and ``ratio`` divides it by the perturbation in percent. Penalised
    evaluations have no energy to compare: their ``dJ_rel`` and ``ratio`` are NaN and
    ``penalised`` is set.
    """
    reference = reference or evaluate(design)
    if reference.penalised or not reference.AEP > 0:
        raise InvalidDesignError(
            "Sensitivity reference design produces no energy", details={"reason": reference.reason, "AEP": reference.AEP}
        )
    rows = []
    for name in variables:
        value = getattr(design.tower, name)
        for sign, label in ((-1.0, "-"), (1.0, "+")):
            perturbed = design.with_vector(
                [value * (1 + sign * delta) if n == name else getattr(design.tower, n) for n in TOWER_VARIABLES]
                + list(design.as_vector()[len(TOWER_VARIABLES) :])
            )
            result = evaluate(perturbed)
            delta_rel = 100.0 * sign * delta
            if result.penalised:
                dJ_rel = float("nan")
            else:
                dJ_rel = 100.0 * (result.AEP - reference.AEP) / reference.AEP
            rows.append(
                {
                    "variable": f"{name}{label}",
                    "delta_rel": delta_rel,
                    "J_out": result.objective,
                    "dJ_rel": dJ_rel,
                    "ratio": dJ_rel / delta_rel,
                    "penalised": result.penalised,
                }
            )
    return pd.DataFrame(rows)
