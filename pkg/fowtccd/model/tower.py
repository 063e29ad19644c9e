import numpy as np

from fowtccd.errors import InvalidDesignError
from fowtccd.model.types import TowerDesign, TowerProperties

# Area and ring inertia of a linearly tapered tube are polynomials of degree <= 4 in the
# span coordinate, so three Gauss-Legendre points integrate them exactly.
_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(3)


def _annulus_inertia(d_outer, thickness):
    d_inner = d_outer - 2 * thickness
    return np.pi / 64 * (d_outer**4 - d_inner**4)


def section_modulus(d_outer: float, thickness: float) -> float:
    """Bending section modulus of a circular annulus."""
    return float(_annulus_inertia(d_outer, thickness) / (d_outer / 2))


def tower_properties(tower: TowerDesign, density: float) -> TowerProperties:
    """Mass properties of a linearly tapered hollow steel frustum.

    Diameter and wall thickness vary linearly from base to tip. The pitch inertia is
    taken about the tower's own centre of gravity, about a horizontal axis.

    Raises:
        InvalidDesignError: if the wall closes up anywhere along the span.
    """
    tower.validate()

    s = 0.5 * tower.l * (1 + _GAUSS_X)
    w = 0.5 * tower.l * _GAUSS_W
    d = tower.d_base + (tower.d_tip - tower.d_base) * s / tower.l
    t = tower.t_base + (tower.t_tip - tower.t_base) * s / tower.l
    if np.any(d - 2 * t <= 0):
        raise InvalidDesignError("Tower inner diameter vanishes along the span", details=tower.as_dict())

    area = np.pi * (d - t) * t
    mass = density * np.sum(w * area)
    cog = density * np.sum(w * area * s) / mass

    # exact annulus second moment about a diameter, per unit length
    ring = density * _annulus_inertia(d, t)
    pitch_inertia = np.sum(w * (density * area * (s - cog) ** 2 + ring))

    return TowerProperties(
        mass=float(mass),
        pitch_inertia=float(pitch_inertia),
        cog_height=float(cog),
        section_modulus=section_modulus(tower.d_base, tower.t_base),
    )


def tower_stress(thrust, tower: TowerDesign, modulus: float = None):
    """Quasi-static fore-aft bending stress at the tower base annulus [Pa].

    The bending moment is hub thrust times tower length; inertial and gravity sag
    contributions are neglected. Works elementwise on arrays of thrust.
    """
    if modulus is None:
        modulus = section_modulus(tower.d_base, tower.t_base)
    if modulus <= 0:
        raise InvalidDesignError("Section modulus must be positive", details=tower.as_dict())
    return np.abs(thrust) * tower.l / modulus
