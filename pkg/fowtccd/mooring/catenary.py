"""Quasi-static elastic catenary with frictionless seabed contact."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from fowtccd.errors import OutOfEnvelopeError, RootFindError

SUSPENDED = "suspended"
SEABED = "seabed"


@dataclass(frozen=True)
class LineProperties:
    length: float
    weight: float  # per unit length, in water
    stiffness: float  # EA
    max_strain: float = 0.02

    @property
    def total_weight(self) -> float:
        return self.weight * self.length

    @classmethod
    def from_parameters(cls, mooring) -> "LineProperties":
        return cls(
            length=mooring.length,
            weight=mooring.weight_in_water,
            stiffness=mooring.axial_stiffness,
            max_strain=mooring.max_strain,
        )


@dataclass(frozen=True)
class CatenaryResult:
    F_H: float
    F_V: float
    regime: str
    residual: float  # relative to the line length
    iterations: int
    touchdown: float  # length resting on the seabed


def line_profile(H: float, V: float, props: LineProperties):
    """Fairlead offset (x, z) and its Jacobian for fairlead tensions (H, V)."""
    w, L, EA = props.weight, props.length, props.stiffness
    a = V / H
    sa = np.sqrt(1 + a * a)
    if V >= w * L:
        b = (V - w * L) / H
        sb = np.sqrt(1 + b * b)
        x = H / w * (np.arcsinh(a) - np.arcsinh(b)) + H * L / EA
        z = H / w * (sa - sb) + (V * L - 0.5 * w * L * L) / EA
        dx_dH = (np.arcsinh(a) - np.arcsinh(b) - a / sa + b / sb) / w + L / EA
        dx_dV = (1 / sa - 1 / sb) / w
        dz_dH = (1 / sa - 1 / sb) / w
        dz_dV = (a / sa - b / sb) / w + L / EA
    else:
        x = L - V / w + H / w * np.arcsinh(a) + H * L / EA
        z = H / w * (sa - 1) + V * V / (2 * EA * w)
        dx_dH = (np.arcsinh(a) - a / sa) / w + L / EA
        dx_dV = (1 / sa - 1) / w
        dz_dH = (1 / sa - 1) / w
        dz_dV = a / (w * sa) + V / (EA * w)
    return np.array([x, z]), np.array([[dx_dH, dx_dV], [dz_dH, dz_dV]])


def _initial_guess(l: float, h: float, props: LineProperties):
    w, L = props.weight, props.length
    if L <= np.hypot(l, h):
        lam = 0.2
    else:
        lam = np.sqrt(3 * ((L * L - h * h) / (l * l) - 1))
    H = max(abs(w * l / (2 * lam)), 1e-3 * w * L)
    V = 0.5 * w * (h / np.tanh(lam) + L)
    return H, V


def solve_catenary(
    l: float,
    h: float,
    props: LineProperties,
    tol: float = 1e-12,
    max_iterations: int = 100,
) -> CatenaryResult:
    """Fairlead tensions for an anchor-to-fairlead offset (l horizontal, h vertical).

    Safeguarded Newton iteration on the elastic catenary closure. A line that can hang
    straight down and lie on the seabed (l <= L - h) carries no horizontal tension.

    Raises:
        OutOfEnvelopeError: if the line would have to stretch beyond ``max_strain``.
        RootFindError: if Newton does not converge.
    """
    L, w = props.length, props.weight
    if l <= 0 or h <= 0:
        raise OutOfEnvelopeError("Fairlead must lie above and away from the anchor", details={"l": l, "h": h})
    if np.hypot(l, h) > L * (1 + props.max_strain):
        raise OutOfEnvelopeError(
            "Line taut beyond elastic model validity",
            details={"l": l, "h": h, "length": L, "max_strain": props.max_strain},
        )
    if l <= L - h:
        return CatenaryResult(0.0, w * h, SEABED, 0.0, 0, L - h)

    H, V = _initial_guess(l, h, props)
    target = np.array([l, h])
    residual = np.inf
    for iteration in range(1, max_iterations + 1):
        value, jac = line_profile(H, V, props)
        r = value - target
        residual = float(np.max(np.abs(r))) / L
        if residual < tol:
            break
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            step = -r * max(H, w) / L
        # keep H positive and V non-negative; backtrack on the residual norm
        alpha = 1.0
        while H + alpha * step[0] <= 0 or V + alpha * step[1] < 0:
            alpha *= 0.5
        norm0 = np.linalg.norm(r)
        for _ in range(30):
            trial, _ = line_profile(H + alpha * step[0], V + alpha * step[1], props)
            if np.linalg.norm(trial - target) < norm0 or alpha < 1e-6:
                break
            alpha *= 0.5
        H, V = H + alpha * step[0], V + alpha * step[1]
    else:
        raise RootFindError(
            "Catenary Newton iteration did not converge",
            details={"l": l, "h": h, "residual": residual, "iterations": max_iterations},
        )

    regime = SUSPENDED if V > w * L else SEABED
    touchdown = 0.0 if regime == SUSPENDED else L - V / w
    return CatenaryResult(float(H), float(V), regime, residual, iteration, float(touchdown))


def regime_boundary(h: float, props: LineProperties) -> float:
    """Horizontal offset at which the touchdown point reaches the anchor (F_V = W_L)."""
    w, L, EA = props.weight, props.length, props.stiffness
    V = w * L

    def height(H):
        a = V / H
        return H / w * (np.sqrt(1 + a * a) - 1) + V * V / (2 * EA * w) - h

    H = brentq(height, 1e-6 * V, 1e3 * V, xtol=1e-12, rtol=1e-14)
    return float(H / w * np.arcsinh(V / H) + H * L / EA)
