"""Irregular long-crested waves, linear kinematics and Morison loads on the spar."""

from dataclasses import dataclass
from typing import Dict, Optional

import autograd.numpy as anp
import numpy as np
from autograd.tracer import getval

from fowtccd.errors import ArgumentError
from fowtccd.model.types import LoadSet, SystemState


@dataclass(frozen=True)
class WaveSpec:
    H_s: float  # m
    T_p: float  # s
    components: int = 50
    seed: int = 0

    def validate(self) -> "WaveSpec":
        if self.H_s < 0 or self.T_p <= 0 or self.components < 1:
            raise ArgumentError(
                "Wave spectrum needs H_s >= 0, T_p > 0 and at least one component",
                details={"H_s": self.H_s, "T_p": self.T_p, "components": self.components},
            )
        return self


def _pm_cumulative(omega, omega_p):
    """Fraction of Pierson-Moskowitz variance below omega."""
    return np.exp(-1.25 * (omega_p / omega) ** 4)


@dataclass(frozen=True)
class WaveField:
    """Superposition of Airy components evaluated at a fixed depth below still water."""

    amplitudes: np.ndarray
    omegas: np.ndarray
    wavenumbers: np.ndarray
    phases: np.ndarray
    depth: float
    duration: float

    @property
    def calm(self) -> bool:
        return not np.any(self.amplitudes)

    def _phase(self, t):
        return np.outer(np.atleast_1d(np.asarray(t, dtype=float)), self.omegas) + self.phases

    def elevation(self, t) -> np.ndarray:
        return np.sum(self.amplitudes * np.cos(self._phase(t)), axis=-1)

    def kinematics(self, t) -> Dict[str, np.ndarray]:
        """Horizontal and vertical fluid velocity and acceleration at the field depth."""
        phase = self._phase(t)
        decay = self.amplitudes * np.exp(-self.wavenumbers * self.depth)
        w = self.omegas
        return {
            "u": np.sum(decay * w * np.cos(phase), axis=-1),
            "w": np.sum(decay * w * np.sin(phase), axis=-1),
            "du": np.sum(-decay * w**2 * np.sin(phase), axis=-1),
            "dw": np.sum(decay * w**2 * np.cos(phase), axis=-1),
        }

    def sample(self, t) -> Dict[str, np.ndarray]:
        out = {"t": np.atleast_1d(np.asarray(t, dtype=float)), "eta": self.elevation(t)}
        out.update(self.kinematics(t))
        return out


def wave_field(spec: WaveSpec, duration: float, depth: float, g: float = 9.81) -> WaveField:
    """Random-phase realization of a Pierson-Moskowitz sea state.

    Components split [0.5, 4] x the peak frequency into equal bands; each band carries its
    exact share of the spectral variance at a seeded frequency inside the band.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    omega_p = 2 * np.pi / spec.T_p
    edges = np.linspace(0.5 * omega_p, 4.0 * omega_p, spec.components + 1)
    omegas = edges[:-1] + rng.uniform(0.0, 1.0, spec.components) * np.diff(edges)
    variance = spec.H_s**2 / 16 * np.diff(_pm_cumulative(edges, omega_p))
    return WaveField(
        amplitudes=np.sqrt(2 * variance),
        omegas=omegas,
        wavenumbers=omegas**2 / g,
        phases=rng.uniform(0.0, 2 * np.pi, spec.components),
        depth=float(depth),
        duration=float(duration),
    )


def calm_sea(depth: float = 0.0, duration: float = 0.0) -> WaveField:
    empty = np.zeros(0)
    return WaveField(empty, empty, empty, empty, depth, duration)


def _per_strip(value):
    return value[..., None] if np.ndim(getval(value)) else value


def morison_terms(theta_p, v_x, v_z, omega_y, u_f, w_f, du_f, dw_f, strips, hydro):
    """Batched body-frame (F_x, F_z, M) from Morison inertia and quadratic drag.

    Horizontal drag acts on each strip with the relative velocity at its elevation;
    the surge inertia force acts at the centre of buoyancy; heave inertia and keel drag
    act at the keel.
    """
    s, c = anp.sin(theta_p), anp.cos(theta_p)
    rho = hydro.rho

    z_i = strips.elevation
    u_body = _per_strip(c) * (_per_strip(v_x) + _per_strip(omega_y) * z_i) + _per_strip(s) * _per_strip(v_z)
    u_rel = _per_strip(u_f) - u_body
    dF = 0.5 * rho * strips.drag_coefficient * strips.diameter * strips.width * anp.abs(u_rel) * u_rel
    drag_x = anp.sum(dF, axis=-1)
    drag_m = anp.sum(z_i * dF, axis=-1)

    inertia_x = (1 + hydro.C_am) * rho * hydro.V_d * du_f

    keel = strips.keel_elevation
    w_body = -s * (v_x + omega_y * keel) + c * v_z
    w_rel = w_f - w_body
    F_z = (1 + hydro.C_am) * rho * np.pi * hydro.d_1**3 / 12 * dw_f
    F_z = F_z + 0.5 * rho * strips.keel_drag_coefficient * strips.keel_area * anp.abs(w_rel) * w_rel

    F_x = drag_x + inertia_x
    F_bx = c * F_x - s * F_z
    F_bz = s * F_x + c * F_z
    M = c * (drag_m + hydro.buoyancy_arm * inertia_x) - keel * s * F_z
    return F_bx, F_bz, M


def wave_loads(state: SystemState, kinematics: Optional[Dict[str, float]], strips, hydro) -> LoadSet:
    """Hydrodynamic excitation and viscous damping on the spar at one instant."""
    k = kinematics or {}
    F_x, F_z, M = morison_terms(
        state.theta_p,
        state.v_x,
        state.v_z,
        state.omega_y,
        float(np.squeeze(k.get("u", 0.0))),
        float(np.squeeze(k.get("w", 0.0))),
        float(np.squeeze(k.get("du", 0.0))),
        float(np.squeeze(k.get("dw", 0.0))),
        strips,
        hydro,
    )
    return LoadSet(F=(float(F_x), float(F_z)), M=float(M), tag="hd")
