from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.integrate import simpson

from fowtccd.model.dynamics import Trajectory, evaluate_trajectory, simulate_forward
from fowtccd.oloc.ipm import OPTIMAL, InteriorPointSolver, IpmResult
from fowtccd.oloc.problem import OlocProblem, build_problem, transcribe, trim_guess
from fowtccd.oloc.transcription import HermiteSimpson
from fowtccd.outputs import write_frame, write_json
from fowtccd.settings import OlocConfig


class ControlSchedule:
    """Quadratic control rates on each segment through the node, midpoint and node values."""

    def __init__(self, t_i: float, h: float, values: np.ndarray):
        self.t_i = float(t_i)
        self.h = float(h)
        self.values = np.asarray(values, dtype=float)
        self.segments = (self.values.shape[0] - 1) // 2

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.floor((t - self.t_i) / self.h), 0, self.segments - 1).astype(int)
        s = (t - self.t_i) / self.h - k
        u0, u1, u2 = self.values[2 * k], self.values[2 * k + 1], self.values[2 * k + 2]
        l0 = 2 * (s - 0.5) * (s - 1)
        l1 = -4 * s * (s - 1)
        l2 = 2 * s * (s - 0.5)
        return l0[..., None] * u0 + l1[..., None] * u1 + l2[..., None] * u2


@dataclass
class FeasibilityReport:
    """Largest violation per quantity, relative to the magnitude of its bounds."""

    relative: Dict[str, float]
    absolute: Dict[str, float]
    tolerance: float

    @property
    def max_bound_violation(self) -> float:
        return max((v for k, v in self.relative.items() if k not in PATH_QUANTITIES), default=0.0)

    @property
    def max_path_violation(self) -> float:
        return max((v for k, v in self.relative.items() if k in PATH_QUANTITIES), default=0.0)

    @property
    def feasible(self) -> bool:
        return max(self.max_bound_violation, self.max_path_violation) <= self.tolerance

    def as_dict(self) -> Dict:
        return {
            "feasible": self.feasible,
            "tolerance": self.tolerance,
            "max_bound_violation": self.max_bound_violation,
            "max_path_violation": self.max_path_violation,
            "relative": dict(self.relative),
            "absolute": dict(self.absolute),
        }


PATH_QUANTITIES = ("stress", "generator_power")


def _violation(values, lower: float, upper: float) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    excess = np.maximum(np.maximum(lower - values, values - upper), 0.0)
    worst = float(np.max(excess)) if excess.size else 0.0
    scale = max(abs(lower) if np.isfinite(lower) else 0.0, abs(upper) if np.isfinite(upper) else 0.0)
    return worst, worst / scale if scale > 0 else worst


def check_feasibility(trajectory: Trajectory, problem: OlocProblem, tolerance: float = 1e-5) -> FeasibilityReport:
    limits = problem.plant.params.limits
    checks = {
        "rotor_speed": (trajectory.channel("Omega"), limits.rotor_speed),
        "platform_pitch": (trajectory.channel("theta_p"), limits.platform_pitch),
        "blade_pitch": (trajectory.channel("theta_b"), limits.blade_pitch),
        "generator_torque": (trajectory.channel("tau_g"), limits.generator_torque),
        "surge": (trajectory.channel("x_p"), limits.surge),
        "heave": (trajectory.channel("z_p"), limits.heave),
        "blade_pitch_rate": (trajectory.channel("theta_b_rate"), (-limits.blade_pitch_rate, limits.blade_pitch_rate)),
        "generator_torque_rate": (
            trajectory.channel("tau_g_rate"),
            (-limits.generator_torque_rate, limits.generator_torque_rate),
        ),
        "stress": (trajectory.channel("sigma"), (0.0, problem.sigma_max)),
        "generator_power": (trajectory.channel("P_u"), (-np.inf, limits.rated_power)),
    }
    absolute, relative = {}, {}
    for name, (values, (lo, hi)) in checks.items():
        absolute[name], relative[name] = _violation(values, lo, hi)
    return FeasibilityReport(relative=relative, absolute=absolute, tolerance=tolerance)


def inner_objective(trajectory: Trajectory, torque_rate_weight: float = 1e-7, pitch_rate_weight: float = 1e7) -> Tuple[float, float]:
    """(J_in, P_out) from the Simpson quadrature of the penalised aerodynamic power."""
    t = trajectory.t
    reward = (
        trajectory.channel("P_a")
        - torque_rate_weight * trajectory.channel("tau_g_rate") ** 2
        - pitch_rate_weight * trajectory.channel("theta_b_rate") ** 2
    )
    duration = float(t[-1] - t[0])
    P_out = float(simpson(reward, x=t)) / duration
    return -duration * P_out, P_out


@dataclass
class OlocSolution:
    trajectory: Trajectory
    controls: ControlSchedule
    J_in: float
    P_out: float
    status: str
    feasibility: FeasibilityReport
    iterations: int
    u_mean: float
    multipliers: Dict[str, np.ndarray] = field(default_factory=dict)
    history: list = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL

    @property
    def P_u_mean(self) -> float:
        """Mean generator power from the accumulated generator energy."""
        t = self.trajectory.t
        return float(self.trajectory.channel("E_g")[-1] / (t[-1] - t[0]))

    def summary(self) -> Dict:
        return {
            "u_mean": self.u_mean,
            "J_in": self.J_in,
            "P_out": self.P_out,
            "P_u_mean": self.P_u_mean,
            "status": self.status,
            "iterations": self.iterations,
            "feasibility": self.feasibility.as_dict(),
        }


def solve_nlp(problem: OlocProblem, nlp: HermiteSimpson, z0=None, solver: Optional[InteriorPointSolver] = None) -> OlocSolution:
    settings = problem.settings
    solver = solver or InteriorPointSolver(
        tol=settings.tol, constr_viol_tol=settings.constr_viol_tol, max_iter=settings.max_iter
    )
    z0 = trim_guess(problem, nlp) if z0 is None else np.clip(z0, nlp.x_lower, nlp.x_upper)
    result: IpmResult = solver.solve(nlp, z0)
    return solution_from_result(problem, nlp, result)


def solution_from_result(problem: OlocProblem, nlp: HermiteSimpson, result: IpmResult) -> OlocSolution:
    settings = problem.settings
    X, U = nlp.unpack(result.x)
    trajectory = evaluate_trajectory(problem.plant, nlp.time, X, U, problem.wind, problem.waves)
    J_in, P_out = inner_objective(trajectory, settings.torque_rate_weight, settings.pitch_rate_weight)
    feasibility = check_feasibility(trajectory, problem, settings.feasibility_tol)
    return OlocSolution(
        trajectory=trajectory,
        controls=ControlSchedule(nlp.t_i, nlp.h, U),
        J_in=J_in,
        P_out=P_out,
        status=result.status,
        feasibility=feasibility,
        iterations=result.iterations,
        u_mean=problem.u_mean,
        multipliers=nlp.multipliers(result.y),
        history=result.history,
    )


def solve_oloc(plant, u_mean: float, settings: OlocConfig, wind=None, waves=None, solver=None, logger=None) -> OlocSolution:
    """Trim, transcribe and solve the optimal control problem of one wind bin."""
    problem = build_problem(plant, u_mean, settings, wind=wind, waves=waves, logger=logger)
    return solve_nlp(problem, transcribe(problem), solver=solver)


def write_solution(solution: OlocSolution, directory, prefix: str = "oloc") -> Dict[str, str]:
    """Trajectory CSV with control rates and a JSON summary."""
    trajectory = solution.trajectory.frame(with_controls=True)
    paths = {
        "trajectory": write_frame(trajectory, f"{directory}/{prefix}_trajectory.csv"),
        "summary": write_json(solution.summary(), f"{directory}/{prefix}_summary.json"),
    }
    return paths


def forward_check(problem: OlocProblem, solution: OlocSolution, rtol: float = 1e-7) -> Dict[str, float]:
    """RMS gap per state channel between the collocated states and a re-integration of the controls.

    Each channel's RMS error is normalised by the channel's range (or its scale when flat).
    """
    t = solution.trajectory.t
    replay = simulate_forward(
        problem.plant, solution.controls, problem.wind, problem.x0, t[0], t[-1], waves=problem.waves, t_eval=t, rtol=rtol
    )
    out = {}
    for name in ("x_p", "z_p", "theta_p", "v_x", "v_z", "omega_y", "Omega", "theta_b", "tau_g"):
        a, b = solution.trajectory.channel(name), replay.channel(name)
        spread = float(np.ptp(a))
        scale = spread if spread > 1e-9 else max(float(np.max(np.abs(a))), 1e-9)
        out[name] = float(np.sqrt(np.mean((a - b) ** 2)) / scale)
    return out
