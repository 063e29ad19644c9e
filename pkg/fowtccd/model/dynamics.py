"""Derivative field of the 4-DOF floating turbine, equilibrium, energy and forward simulation."""

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import autograd.numpy as anp
import numpy as np
import pandas as pd
from autograd import jacobian
from autograd.tracer import getval
from scipy.integrate import solve_ivp
from scipy.optimize import root

from fowtccd.aero.loads import rotor_terms
from fowtccd.environment.waves import WaveField, morison_terms
from fowtccd.errors import RootFindError, StiffnessError
from fowtccd.model.hydrostatics import check_draught, hydrostatic_potential, hydrostatic_terms
from fowtccd.model.matrices import coriolis_loads, mass_components
from fowtccd.model.types import CONTROL_NAMES, IX, STATE_NAMES, SystemState

OUTPUT_NAMES = ("P_a", "thrust", "sigma", "P_u", "tau_a", "U_rel", "tsr")
TRAJECTORY_COLUMNS = ("t",) + STATE_NAMES[:-1] + ("P_u", "sigma")

_KINEMATIC_KEYS = ("u", "w", "du", "dw")


def _zeros_like(x):
    return np.zeros(np.shape(getval(x))) if np.ndim(getval(x)) else 0.0


def plant_point(plant, X, U, u_wind, kinematics: Optional[Dict] = None):
    """Batched state derivative and outputs.

    Args:
        plant: PlantModel.
        X: array (..., 10) of states in STATE_NAMES order.
        U: array (..., 2) of blade pitch rate [rad/s] and generator torque rate [N m/s].
        u_wind: absolute wind speed at the hub, shape (...).
        kinematics: fluid velocity and acceleration arrays ``u, w, du, dw`` at the
            platform, shape (...); None for still water.

    Returns:
        (X_dot, outputs) where outputs maps OUTPUT_NAMES (plus ``sigma_signed``) to
        arrays of shape (...). Written with autograd numpy so the caller can
        differentiate through it.
    """
    x_p, z_p, theta_p = X[..., 0], X[..., 1], X[..., 2]
    v_x, v_z, omega_y, Omega = X[..., 3], X[..., 4], X[..., 5], X[..., 6]
    theta_b, tau_g = X[..., 7], X[..., 8]
    s, c = anp.sin(theta_p), anp.cos(theta_p)

    inv = plant.inventory
    g = plant.params.gravity
    m_T, M_13, M_26, _ = mass_components(inv)
    F_x = m_T * g * s
    F_z = -m_T * g * c
    M = g * s * M_13 + g * c * M_26
    zero = _zeros_like(theta_p)
    thrust, tau_a, P_a, U_rel, tsr = zero, zero, zero, zero, zero

    if plant.has("hs"):
        hx, hz, hm = hydrostatic_terms(z_p, theta_p, plant.hydro)
        F_x, F_z, M = F_x + hx, F_z + hz, M + hm
    if plant.has("moor"):
        mx, mz, mm = plant.layout.loads(x_p, z_p, theta_p, plant.surrogate.forces)
        F_x, F_z, M = F_x + mx, F_z + mz, M + mm
    if plant.has("a"):
        rotor = plant.params.rotor
        terms = rotor_terms(
            u_wind,
            theta_p,
            v_x,
            v_z,
            omega_y,
            Omega,
            theta_b,
            plant.surface,
            rotor.radius,
            plant.params.air_density,
            plant.hub,
            rotor.omega_floor,
        )
        thrust, tau_a, P_a = terms["thrust"], terms["tau_a"], terms["P_a"]
        U_rel, tsr = terms["U_rel"], terms["tsr"]
        F_x = F_x + thrust
        M = M + plant.hub.elevation * thrust
    if plant.has("hd"):
        k = kinematics or {}
        dx, dz, dm = morison_terms(
            theta_p,
            v_x,
            v_z,
            omega_y,
            *(k.get(key, zero) for key in _KINEMATIC_KEYS),
            plant.strips,
            plant.hydro,
        )
        F_x, F_z, M = F_x + dx, F_z + dz, M + dm

    velocities = X[..., 3:7]
    rhs = anp.stack([F_x, F_z, M, tau_a - tau_g], axis=-1) - coriolis_loads(velocities, plant.M_sys, plant.A_11)
    acc = anp.dot(rhs, plant.Minv.T)

    X_dot = anp.stack(
        [
            c * v_x + s * v_z,
            -s * v_x + c * v_z,
            omega_y,
            acc[..., 0],
            acc[..., 1],
            acc[..., 2],
            acc[..., 3],
            U[..., 0],
            U[..., 1],
            tau_g * Omega,
        ],
        axis=-1,
    )
    sigma_signed = thrust * plant.tower.l / plant.section_modulus
    outputs = {
        "P_a": P_a,
        "thrust": thrust,
        "sigma": anp.abs(sigma_signed),
        "sigma_signed": sigma_signed,
        "P_u": tau_g * Omega,
        "tau_a": tau_a,
        "U_rel": U_rel,
        "tsr": tsr,
    }
    return X_dot, outputs


def _point(plant, state, controls, u_wind, kinematics):
    X = np.asarray(state.to_array() if isinstance(state, SystemState) else state, dtype=float)
    U = np.zeros(2) if controls is None else np.asarray(controls, dtype=float)
    k = None if kinematics is None else {key: float(np.squeeze(kinematics[key])) for key in _KINEMATIC_KEYS}
    return plant_point(plant, X, U, float(u_wind), k)


def state_derivative(plant, state, u_wind: float = 0.0, kinematics: Optional[Dict] = None, controls=None) -> np.ndarray:
    """Time derivative of the 10-slot state for one wind and wave sample and fixed control rates."""
    X_dot, _ = _point(plant, state, controls, u_wind, kinematics)
    return np.asarray(X_dot, dtype=float)


def point_outputs(plant, state, u_wind: float = 0.0, kinematics: Optional[Dict] = None) -> Dict[str, float]:
    _, outputs = _point(plant, state, None, u_wind, kinematics)
    return {k: float(v) for k, v in outputs.items()}


def static_equilibrium(plant, state: Optional[SystemState] = None, u_wind: float = 0.0, tol: float = 1e-10) -> SystemState:
    """Platform pose where gravity, buoyancy, mooring and steady rotor loads balance.

    Velocities are zeroed; rotor speed and actuator states are kept. Without a mooring
    model the surge offset is held and only heave and pitch are solved for.

    Raises:
        RootFindError: if the solver does not converge.
    """
    base = (state or SystemState()).to_array()
    base[IX["v_x"] : IX["Omega"]] = 0.0
    unknowns = [0, 1, 2] if plant.has("moor") else [1, 2]
    weight = plant.inventory.total_mass * plant.params.gravity
    scale = np.array([weight, weight, 10 * weight])[unknowns]

    def residual(q):
        X = anp.concatenate([base[: unknowns[0]], q, base[unknowns[-1] + 1 :]])
        # at rest the net load is the generalized mass times the acceleration
        X_dot, _ = plant_point(plant, X, anp.zeros(2), u_wind, None)
        forces = anp.dot(X_dot[3:7], (plant.M_sys + plant.A_bar).T)
        return forces[np.array(unknowns)] / scale

    q0 = base[unknowns]
    result = root(residual, q0, jac=jacobian(residual), method="hybr", tol=tol)
    if not result.success or np.max(np.abs(result.fun)) > 1e-8:
        raise RootFindError(
            "Static equilibrium did not converge",
            details={"message": result.message, "residual": np.abs(result.fun).tolist(), "u_wind": u_wind},
        )
    X = base.copy()
    X[unknowns] = result.x
    return SystemState.from_array(X)


def mechanical_energy(plant, state: SystemState) -> float:
    """Kinetic plus gravity and hydrostatic potential energy, zero at the design pose."""
    X = state.to_array()
    v = X[IX["v_x"] : IX["theta_b"]]
    kinetic = 0.5 * v @ (plant.M_sys + plant.A_bar) @ v
    m_T, M_13, M_26, _ = mass_components(plant.inventory)
    g = plant.params.gravity

    def potential(z_p, theta_p):
        value = g * (m_T * z_p - np.sin(theta_p) * M_26 + np.cos(theta_p) * M_13)
        if plant.has("hs"):
            value += hydrostatic_potential(z_p, theta_p, plant.hydro)
        return float(value)

    return float(kinetic + potential(state.z_p, state.theta_p) - potential(0.0, 0.0))


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # (n, 10)
    controls: np.ndarray  # (n, 2)
    outputs: Dict[str, np.ndarray]

    def channel(self, name: str) -> np.ndarray:
        if name in IX:
            return self.states[:, IX[name]]
        if name in CONTROL_NAMES:
            return self.controls[:, CONTROL_NAMES.index(name)]
        return self.outputs[name]

    def frame(self, with_controls: bool = False) -> pd.DataFrame:
        columns = list(TRAJECTORY_COLUMNS) + (list(CONTROL_NAMES) if with_controls else [])
        return pd.DataFrame({name: self.t if name == "t" else self.channel(name) for name in columns})


def evaluate_trajectory(plant, t, states, controls, wind: Callable, waves: Optional[WaveField] = None) -> Trajectory:
    """Attach plant outputs to sampled states.

    Raises:
        ModelEnvelopeError: if a sampled heave leaves the spar draught envelope.
    """
    t = np.asarray(t, dtype=float)
    states = np.asarray(states, dtype=float)
    controls = np.asarray(controls, dtype=float)
    if plant.has("hs"):
        spar = plant.params.platform.spar
        check_draught(states[..., IX["z_p"]], spar.draft, spar.freeboard)
    kinematics = None if waves is None or waves.calm else waves.kinematics(t)
    _, outputs = plant_point(plant, states, controls, np.asarray(wind(t), dtype=float), kinematics)
    return Trajectory(t=t, states=states, controls=controls, outputs={k: np.asarray(v, dtype=float) for k, v in outputs.items()})


def simulate_forward(
    plant,
    control: Callable[[float], np.ndarray],
    wind: Callable[[float], float],
    x0,
    t_i: float,
    t_f: float,
    waves: Optional[WaveField] = None,
    t_eval=None,
    rtol: float = 1e-7,
    atol: float = 1e-9,
) -> Trajectory:
    """Integrate the derivative field with the Dormand-Prince 5(4) pair.

    Raises:
        StiffnessError: if the step size underflows or the integrator otherwise fails.
    """
    if not t_f > t_i:
        raise StiffnessError("Integration interval is empty", details={"t_i": t_i, "t_f": t_f})
    x0 = x0.to_array() if isinstance(x0, SystemState) else np.asarray(x0, dtype=float)
    calm = waves is None or waves.calm

    def rhs(t, X):
        k = None if calm else {key: float(v[0]) for key, v in waves.kinematics(t).items()}
        X_dot, _ = plant_point(plant, X, np.asarray(control(t), dtype=float), float(wind(t)), k)
        return X_dot

    if t_eval is None:
        t_eval = np.linspace(t_i, t_f, int(round((t_f - t_i) / 0.5)) + 1)
    result = solve_ivp(rhs, (t_i, t_f), x0, method="RK45", t_eval=t_eval, rtol=rtol, atol=atol, dense_output=True)
    if not result.success:
        last = result.y[:, -1] if result.y.size else x0
        raise StiffnessError(
            f"Forward integration failed: {result.message}",
            details={"t": float(result.t[-1]) if result.t.size else t_i, "state": dict(zip(STATE_NAMES, last.tolist()))},
        )
    controls = np.array([np.asarray(control(t), dtype=float) for t in result.t])
    return evaluate_trajectory(plant, result.t, result.y.T, controls, wind, waves)

