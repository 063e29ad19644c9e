"""The per-bin optimal control problem of the floating turbine and its steady trim."""

from dataclasses import dataclass, replace
from typing import Callable, Optional

import autograd.numpy as anp
import numpy as np

from fowtccd.aero.loads import rotor_terms
from fowtccd.environment.waves import WaveField, calm_sea
from fowtccd.environment.wind import wind_profile
from fowtccd.errors import ArgumentError, FowtCcdError
from fowtccd.model.dynamics import plant_point, static_equilibrium
from fowtccd.model.types import IX, N_STATES, SystemState
from fowtccd.oloc.transcription import CollocationModel, HermiteSimpson
from fowtccd.settings import OlocConfig

PATH_NAMES = ("sigma_signed", "P_u")


def steady_wind(u: float, duration: float):
    return wind_profile(u, duration=duration, amplitude=0.0)


def optimal_tsr(surface, pitch_deg: float = 0.0, resolution: int = 2001) -> float:
    """Tip speed ratio on the Cp-max ridge at a fixed blade pitch."""
    grid = np.linspace(surface.tsr[0], surface.tsr[-1], resolution)
    cp, _ = surface.coefficients(grid, np.full(grid.shape, pitch_deg))
    return float(grid[int(np.argmax(cp))])


def _steady_rotor(plant, u: float, Omega: float, theta_b: float):
    rotor = plant.params.rotor
    terms = rotor_terms(
        u, 0.0, 0.0, 0.0, 0.0, Omega, theta_b, plant.surface, rotor.radius, plant.params.air_density, plant.hub, rotor.omega_floor
    )
    return {k: float(v) for k, v in terms.items()}


def trim_state(plant, u: float, sigma_max: float, margin: float = 0.05, logger=None) -> SystemState:
    """Steady operating point at mean wind u.

    Rotor speed follows the Cp-max ridge up to rated speed. Blade pitch is the smallest
    angle at which power and torque stay within rating, the tower stress keeps the
    margin below sigma_max and the static platform pose stays inside its bounds.
    Generator torque balances the rotor torque.

    Raises:
        RootFindError: if the platform equilibrium fails at the chosen pitch.
    """
    if u < 0:
        raise ArgumentError("Wind speed must be nonnegative", details={"u": u})
    limits = plant.params.limits
    rotor = plant.params.rotor
    if not plant.has("a"):
        state = SystemState(Omega=0.0)
        return static_equilibrium(plant, state, u_wind=u)

    tsr = optimal_tsr(plant.surface)
    Omega = float(np.clip(tsr * u / rotor.radius, limits.rotor_speed[0], min(rotor.rated_speed, limits.rotor_speed[1])))
    keep = 1.0 - margin
    pitch_lo, pitch_hi = limits.blade_pitch

    def pose(theta_b, terms):
        state = SystemState(Omega=Omega, theta_b=theta_b, tau_g=terms["tau_a"])
        return static_equilibrium(plant, state, u_wind=u)

    def admissible(theta_b):
        terms = _steady_rotor(plant, u, Omega, theta_b)
        if terms["P_a"] > limits.rated_power or terms["tau_a"] > limits.generator_torque[1]:
            return False
        if terms["thrust"] * plant.tower.l / plant.section_modulus > keep * sigma_max:
            return False
        try:
            eq = pose(theta_b, terms)
        except FowtCcdError:
            return False
        surge_lo, surge_hi = limits.surge
        pitch_limit = min(abs(limits.platform_pitch[0]), abs(limits.platform_pitch[1]))
        return abs(eq.theta_p) <= keep * pitch_limit and keep * surge_lo <= eq.x_p <= keep * surge_hi

    if admissible(pitch_lo):
        theta_b = pitch_lo
    elif not admissible(pitch_hi):
        theta_b = pitch_hi
        if logger is not None:
            logger.warning(f"No blade pitch satisfies the trim limits at u={u:.2f} m/s; using the upper pitch bound")
    else:
        lo, hi = pitch_lo, pitch_hi
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if admissible(mid):
                hi = mid
            else:
                lo = mid
        theta_b = hi

    terms = _steady_rotor(plant, u, Omega, theta_b)
    tau_g = float(np.clip(terms["tau_a"], *limits.generator_torque))
    return pose(theta_b, {**terms, "tau_a": tau_g})


@dataclass
class OlocProblem:
    plant: object
    wind: Callable
    waves: WaveField
    settings: OlocConfig
    x0: np.ndarray
    u_mean: float

    @property
    def sigma_max(self) -> float:
        return self.settings.sigma_max

    @property
    def duration(self) -> float:
        return self.settings.t_f - self.settings.t_i

    def state_bounds(self):
        limits = self.plant.params.limits
        lower = np.full(N_STATES, -np.inf)
        upper = np.full(N_STATES, np.inf)
        for name, bounds in (
            ("x_p", limits.surge),
            ("z_p", limits.heave),
            ("theta_p", limits.platform_pitch),
            ("Omega", limits.rotor_speed),
            ("theta_b", limits.blade_pitch),
            ("tau_g", limits.generator_torque),
        ):
            lower[IX[name]], upper[IX[name]] = bounds
        return lower, upper

    def control_bounds(self):
        limits = self.plant.params.limits
        rates = np.array([limits.blade_pitch_rate, limits.generator_torque_rate])
        return -rates, rates

    def path_bounds(self):
        rated = self.plant.params.limits.rated_power
        return np.array([-self.sigma_max, -np.inf]), np.array([self.sigma_max, rated])

    def with_sigma_max(self, sigma_max_mpa: float) -> "OlocProblem":
        return replace(self, settings=self.settings.model_copy(update={"sigma_max_mpa": sigma_max_mpa}))


def build_problem(plant, u_mean: float, settings: OlocConfig, wind: Optional[Callable] = None, waves: Optional[WaveField] = None, logger=None) -> OlocProblem:
    """Problem for one wind bin, starting from the steady trim at the bin's mean wind."""
    waves = waves if waves is not None and plant.has("hd") else calm_sea(plant.wave_depth)
    wind = wind if wind is not None else steady_wind(u_mean, settings.t_f - settings.t_i)
    trim = trim_state(plant, u_mean, settings.sigma_max, settings.trim_margin, logger=logger)
    x0 = trim.to_array()
    x0[IX["E_g"]] = 0.0
    return OlocProblem(plant=plant, wind=wind, waves=waves, settings=settings, x0=x0, u_mean=float(u_mean))


def state_scale(plant, duration: float) -> np.ndarray:
    rated = plant.params.limits.rated_power
    return np.array([10.0, 1.0, 0.1, 1.0, 0.1, 0.05, 1.0, 0.1, 1e6, rated * duration])


def plant_collocation_model(problem: OlocProblem) -> CollocationModel:
    plant = problem.plant
    settings = problem.settings
    w_tau, w_b = settings.torque_rate_weight, settings.pitch_rate_weight
    waves = problem.waves
    wind = problem.wind
    sample = {}

    def environment(t):
        # the mesh is fixed, so wind and wave samples are computed once
        key = t.tobytes()
        if key not in sample:
            kinematics = None if waves.calm else waves.kinematics(t)
            sample.clear()
            sample[key] = (np.asarray(wind(t), dtype=float), kinematics)
        return sample[key]

    def point(X, U, t):
        u, kinematics = environment(t)
        X_dot, out = plant_point(plant, X, U, u, kinematics)
        reward = out["P_a"] - w_tau * U[:, 1] ** 2 - w_b * U[:, 0] ** 2
        return anp.concatenate(
            [X_dot, anp.stack([out[name] for name in PATH_NAMES], axis=-1), reward[:, None]], axis=-1
        )

    lower, upper = problem.state_bounds()
    u_lower, u_upper = problem.control_bounds()
    p_lower, p_upper = problem.path_bounds()
    rated = plant.params.limits.rated_power
    return CollocationModel(
        point=point,
        state_scale=state_scale(plant, problem.duration),
        control_scale=np.array([0.1, 1e5]),
        state_lower=lower,
        state_upper=upper,
        control_lower=u_lower,
        control_upper=u_upper,
        path_lower=p_lower,
        path_upper=p_upper,
        path_scale=np.array([1e6, 1e6]),
        initial_state=problem.x0,
        objective_scale=rated * problem.duration,
    )


def transcribe(problem: OlocProblem) -> HermiteSimpson:
    settings = problem.settings
    return HermiteSimpson(plant_collocation_model(problem), settings.t_i, settings.t_f, settings.segments)


def trim_guess(problem: OlocProblem, nlp: HermiteSimpson) -> np.ndarray:
    """Constant trim states with generator energy growing at the trim power, zero rates."""
    X = np.tile(problem.x0, (nlp.points, 1))
    P_u = problem.x0[IX["tau_g"]] * problem.x0[IX["Omega"]]
    X[:, IX["E_g"]] = P_u * (nlp.time - nlp.t_i)
    U = np.zeros((nlp.points, 2))
    return nlp.initial_guess(X, U)
