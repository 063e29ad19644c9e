"""Steady blade element momentum solution, vectorized over operating points."""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from fowtccd.aero.blade import BladeGeometry
from fowtccd.aero.polars import Polar

BUHL_A_C = 0.4
BEM_MODEL = "prandtl-buhl"  # part of the surface cache key


@dataclass
class BemResult:
    cp: np.ndarray
    ct: np.ndarray
    unconverged: int  # annulus solves that hit the iteration cap


def _prandtl(blades, r, R, R_hub, sin_phi):
    sin_phi = np.maximum(np.abs(sin_phi), 1e-6)
    f_tip = blades / 2 * (R - r) / (r * sin_phi)
    f_hub = blades / 2 * (r - R_hub) / (r * sin_phi)
    F_tip = 2 / np.pi * np.arccos(np.clip(np.exp(-f_tip), 0.0, 1.0))
    F_hub = 2 / np.pi * np.arccos(np.clip(np.exp(-f_hub), 0.0, 1.0))
    return np.maximum(F_tip * F_hub, 1e-4)


def _axial_induction(k, F):
    """Axial induction from the blade-element loading k = sigma cn / (4 F sin^2 phi).

    Momentum theory up to a = 0.4 (k = 2/3 for F = 1), then Buhl's form of the Glauert
    empirical thrust curve, which joins the momentum branch with matching value and slope.
    """
    k_switch = BUHL_A_C / (1 - BUHL_A_C)
    light = k / np.where(np.abs(1 + k) < 1e-9, 1e-9, 1 + k)
    g1 = 2 * F * k - (10 / 9 - F)
    g2 = np.sqrt(np.maximum(2 * F * k - F * (4 / 3 - F), 0.0))
    g3 = 2 * F * k - (25 / 9 - 2 * F)
    flat = np.abs(g3) < 1e-6
    heavy = np.where(flat, 1 - 1 / (2 * np.maximum(g2, 1e-9)), (g1 - g2) / np.where(flat, 1.0, g3))
    return np.where(k > k_switch, heavy, light)


def bem_solve(
    geometry: BladeGeometry,
    polars: Dict[str, Polar],
    tsr,
    pitch_deg,
    blades: int,
    radius: float,
    hub_radius: float,
    tol: float = 1e-7,
    max_iterations: int = 300,
    relaxation: float = 0.3,
    logger=None,
) -> BemResult:
    """Power and thrust coefficients for arrays of tip speed ratio and blade pitch.

    Each annulus iterates the axial and tangential induction factors with Prandtl tip
    and hub losses and the Glauert correction (Buhl form) above a = 0.4. Annuli that
    do not converge keep their last bounded iterate and are counted.
    """
    tsr = np.atleast_1d(np.asarray(tsr, dtype=float))
    pitch = np.atleast_1d(np.asarray(pitch_deg, dtype=float))
    tsr, pitch = np.broadcast_arrays(tsr, pitch)
    shape = tsr.shape
    lam = tsr.reshape(-1, 1)
    theta = pitch.reshape(-1, 1)

    r = geometry.radii[None, :]
    dr = geometry.widths[None, :]
    c = geometry.chord[None, :]
    solidity = blades * c / (2 * np.pi * r)
    lam_r = lam * r / radius
    twist = geometry.twist[None, :] + theta

    groups = {}
    for j, name in enumerate(geometry.airfoils):
        groups.setdefault(name, []).append(j)

    def coefficients(alpha):
        cl = np.empty_like(alpha)
        cd = np.empty_like(alpha)
        for name, cols in groups.items():
            cl[:, cols], cd[:, cols] = polars[name].lookup(alpha[:, cols])
        return cl, cd

    a = np.zeros(lam_r.shape)
    ap = np.zeros(lam_r.shape)
    active = np.ones(lam_r.shape, dtype=bool)
    for _ in range(max_iterations):
        phi = np.arctan2(1 - a, (1 + ap) * lam_r)
        alpha = np.rad2deg(phi) - twist
        cl, cd = coefficients(alpha)
        s, co = np.sin(phi), np.cos(phi)
        cn = cl * co + cd * s
        ctan = cl * s - cd * co
        F = _prandtl(blades, r, radius, hub_radius, s)

        a_new = _axial_induction(solidity * cn / (4 * F * np.maximum(s**2, 1e-12)), F)
        denom = 4 * F * s * co / (solidity * np.where(np.abs(ctan) < 1e-9, 1e-9, ctan)) - 1
        ap_new = 1 / np.where(np.abs(denom) < 1e-6, 1e-6, denom)

        a_new = np.clip(a_new, -0.5, 0.95)
        ap_new = np.clip(ap_new, -0.5, 0.5)
        change = np.maximum(np.abs(a_new - a), np.abs(ap_new - ap))
        a = np.where(active, a + relaxation * (a_new - a), a)
        ap = np.where(active, ap + relaxation * (ap_new - ap), ap)
        active &= change > tol
        if not active.any():
            break

    phi = np.arctan2(1 - a, (1 + ap) * lam_r)
    cl, cd = coefficients(np.rad2deg(phi) - twist)
    s, co = np.sin(phi), np.cos(phi)
    W2 = (1 - a) ** 2 + (lam_r * (1 + ap)) ** 2
    area = np.pi * radius**2
    ct = np.sum(W2 * blades * c * (cl * co + cd * s) * dr, axis=1) / area
    cp = lam[:, 0] / radius * np.sum(W2 * blades * c * (cl * s - cd * co) * r * dr, axis=1) / area

    unconverged = int(active.sum())
    if unconverged and logger is not None:
        logger.warning(f"BEM: {unconverged} annulus solves did not converge")
    return BemResult(cp=cp.reshape(shape), ct=ct.reshape(shape), unconverged=unconverged)
