"""Rotor loads from the tabulated coefficients and the wind relative to the moving hub."""

from dataclasses import dataclass

import autograd.numpy as anp
import numpy as np
from autograd.tracer import getval

from fowtccd.model.types import LoadSet, SystemState


@dataclass(frozen=True)
class HubGeometry:
    elevation: float  # D_r, above the platform centre of gravity along the tower axis
    overhang: float  # d_r, upwind of the tower axis


@dataclass(frozen=True)
class AeroLoads:
    thrust: float
    tau_a: float
    P_a: float
    U_rel: float
    tsr: float
    stalled_inflow: bool
    load: LoadSet


def hub_velocity(theta_p, v_x, v_z, omega_y, hub: HubGeometry):
    """Earth-frame fore-aft velocity of the hub."""
    s, c = anp.sin(theta_p), anp.cos(theta_p)
    return c * (v_x + omega_y * hub.elevation) + s * (v_z + omega_y * hub.overhang)


def rotor_terms(u_abs, theta_p, v_x, v_z, omega_y, Omega, theta_b, surface, radius, air_density, hub, omega_floor=0.05):
    """Batched rotor thrust, torque, power, relative wind and tip speed ratio.

    Blade pitch is in radians. Loads are zero where the relative wind does not blow
    onto the rotor; torque divides by max(Omega, omega_floor).
    """
    U_rel = u_abs - hub_velocity(theta_p, v_x, v_z, omega_y, hub)
    onto = getval(U_rel) > 0
    U_safe = anp.where(onto, U_rel, 1.0)
    tsr = Omega * radius / U_safe
    cp, ct = surface.coefficients(tsr, theta_b * (180.0 / np.pi))
    disc = 0.5 * air_density * np.pi * radius**2
    thrust = anp.where(onto, disc * ct * U_safe**2, 0.0)
    P_raw = anp.where(onto, disc * cp * U_safe**3, 0.0)
    tau_a = P_raw / anp.maximum(Omega, omega_floor)
    return {
        "thrust": thrust,
        "tau_a": tau_a,
        "P_a": tau_a * Omega,
        "U_rel": U_rel,
        "tsr": tsr,
    }


def aero_loads(
    u_abs: float,
    state: SystemState,
    surface,
    radius: float,
    air_density: float,
    hub: HubGeometry,
    omega_floor: float = 0.05,
    logger=None,
) -> AeroLoads:
    """Aerodynamic loads at one instant; thrust acts along the tower-normal body axis at the hub."""
    terms = rotor_terms(
        u_abs,
        state.theta_p,
        state.v_x,
        state.v_z,
        state.omega_y,
        state.Omega,
        state.theta_b,
        surface,
        radius,
        air_density,
        hub,
        omega_floor,
    )
    values = {k: float(v) for k, v in terms.items()}
    stalled = values["U_rel"] <= 0
    if stalled and logger is not None:
        logger.warning(f"Relative wind {values['U_rel']:.3f} m/s does not reach the rotor; aero loads set to zero")
    load = LoadSet(
        F=(values["thrust"], 0.0),
        M=hub.elevation * values["thrust"],
        tau_a=values["tau_a"],
        tag="a",
    )
    return AeroLoads(
        thrust=values["thrust"],
        tau_a=values["tau_a"],
        P_a=values["P_a"],
        U_rel=values["U_rel"],
        tsr=values["tsr"] if not stalled else 0.0,
        stalled_inflow=stalled,
        load=load,
    )
