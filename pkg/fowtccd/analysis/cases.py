"""Case studies built from single-bin solves: tower mass comparison and waves on/off."""

from dataclasses import replace
from typing import Dict, Optional

import numpy as np
import pandas as pd

from fowtccd.analysis.fatigue import FatigueSpec, strength_table
from fowtccd.ccd.design import PlantDesign
from fowtccd.model.dynamics import simulate_forward, static_equilibrium
from fowtccd.model.types import IX, SystemState
from fowtccd.oloc.problem import build_problem, transcribe
from fowtccd.oloc.solution import OlocSolution, check_feasibility, inner_objective, solve_nlp

ACTUATOR_STATES = ("Omega", "theta_b", "tau_g")


def heavier_tower(design: PlantDesign, params, thickness_scale: float = 1.5) -> PlantDesign:
    """Same tower with both wall thicknesses scaled, kept inside the design box."""
    box = params.tower.bounds
    tower = replace(
        design.tower,
        t_tip=float(np.clip(design.tower.t_tip * thickness_scale, *box["t_tip"])),
        t_base=float(np.clip(design.tower.t_base * thickness_scale, *box["t_base"])),
    )
    return replace(design, tower=tower)


def _case_row(case: str, plant, P_out: float, trajectory, feasibility, status: str) -> Dict:
    return {
        "case": case,
        "m_t": plant.tower_props.mass,
        "m_p": plant.inventory.m_p,
        "P_out": P_out,
        "max_abs_theta_p": float(np.max(np.abs(trajectory.channel("theta_p")))),
        "max_bound_violation": feasibility.max_bound_violation,
        "max_path_violation": feasibility.max_path_violation,
        "platform_pitch_violation": feasibility.absolute["platform_pitch"],
        "feasible": feasibility.feasible,
        "status": status,
    }


def mass_comparison(workbench, case1: PlantDesign, case2: PlantDesign, u_bar: float, logger=None) -> Dict[str, pd.DataFrame]:
    """Cases 1 and 2 solved for one bin; Case 3 replays the Case 1 controls on the Case 2 plant.

    The replay starts from the Case 2 static pose under the Case 1 actuator trim.
    """
    settings = workbench.settings.oloc
    rows, trajectories = [], {}
    solved: Dict[str, tuple] = {}
    for case, design in (("case1", case1), ("case2", case2)):
        plant = workbench.plant(design.tower, design.blade)
        u_hub = workbench.hub_wind(u_bar, design.tower.l)
        problem = build_problem(
            plant, u_hub, settings, wind=workbench.wind(u_hub), waves=workbench.waves(plant), logger=logger
        )
        solution: OlocSolution = solve_nlp(problem, transcribe(problem))
        solved[case] = (plant, problem, solution)
        trajectories[case] = solution.trajectory
        rows.append(_case_row(case, plant, solution.P_out, solution.trajectory, solution.feasibility, solution.status))

    _, problem1, solution1 = solved["case1"]
    plant2, problem2, _ = solved["case2"]
    start = SystemState.from_array(problem2.x0)
    start = replace(start, **{name: float(problem1.x0[IX[name]]) for name in ACTUATOR_STATES})
    x0 = static_equilibrium(plant2, start, problem1.u_mean).to_array()
    x0[IX["E_g"]] = 0.0
    replay = simulate_forward(
        plant2,
        solution1.controls,
        problem1.wind,
        x0,
        settings.t_i,
        settings.t_f,
        waves=problem2.waves,
        t_eval=solution1.trajectory.t,
    )
    _, P_out = inner_objective(replay, settings.torque_rate_weight, settings.pitch_rate_weight)
    feasibility = check_feasibility(replay, problem2, settings.feasibility_tol)
    rows.append(_case_row("case3", plant2, P_out, replay, feasibility, "forward"))
    trajectories["case3"] = replay
    if logger is not None:
        logger.info(f"Case 3 replay: max bound violation {feasibility.max_bound_violation:.4g}")

    frames = {"mass_comparison": pd.DataFrame(rows)}
    for case, trajectory in trajectories.items():
        frames[f"{case}_trajectory"] = trajectory.frame(with_controls=True)
    return frames


def wave_study(workbench, design: PlantDesign, u_bar: float, spec: FatigueSpec, logger=None) -> Dict[str, pd.DataFrame]:
    """Same plant and wind solved in calm sea and in irregular waves, with the strength each history needs."""
    settings = workbench.settings.oloc
    plant = workbench.plant(design.tower, design.blade)
    u_hub = workbench.hub_wind(u_bar, design.tower.l)
    wind = workbench.wind(u_hub)
    frames, series, summary = {}, {}, []
    t: Optional[np.ndarray] = None
    for case, enabled in (("waves_off", False), ("waves_on", True)):
        problem = build_problem(plant, u_hub, settings, wind=wind, waves=workbench.waves(plant, enabled=enabled), logger=logger)
        solution = solve_nlp(problem, transcribe(problem))
        frames[f"{case}_trajectory"] = solution.trajectory.frame(with_controls=True)
        t = solution.trajectory.t
        series[case] = solution.trajectory.channel("sigma_signed")
        summary.append({"case": case, "P_out": solution.P_out, "status": solution.status, "feasible": solution.feasibility.feasible})
    strengths = strength_table(series, spec, t)
    frames["fatigue"] = strengths.merge(pd.DataFrame(summary), on="case")
    return frames
