"""Blade twist/chord parameterization over the 17-node NREL 5 MW blade."""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from fowtccd.errors import InvalidDesignError

N_NODES = 17
FIXED_NODES = (1, 2, 3)


@dataclass(frozen=True)
class BladeDesign:
    """Twist [deg] and chord [m] at the optimizing nodes (1-based node numbers)."""

    twist: Tuple[float, ...]
    chord: Tuple[float, ...]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.twist, self.chord]).astype(float)

    @classmethod
    def from_vector(cls, values) -> "BladeDesign":
        values = np.asarray(values, dtype=float)
        half = values.size // 2
        return cls(twist=tuple(values[:half]), chord=tuple(values[half:]))

    @classmethod
    def baseline(cls, blade_params) -> "BladeDesign":
        return cls(twist=tuple(blade_params.baseline_twist), chord=tuple(blade_params.baseline_chord))

    def validate(self, blade_params) -> "BladeDesign":
        nodes = blade_params.optimizing_nodes
        problems = []
        if len(self.twist) != len(nodes) or len(self.chord) != len(nodes):
            problems.append(f"expected {len(nodes)} twist and chord values")
        lo, hi = blade_params.twist_bounds
        if any(v < lo or v > hi for v in self.twist):
            problems.append(f"twist outside [{lo}, {hi}] deg")
        lo, hi = blade_params.chord_bounds
        if any(v < lo or v > hi for v in self.chord):
            problems.append(f"chord outside [{lo}, {hi}] m")
        if problems:
            raise InvalidDesignError(
                "Blade design outside its bounds",
                details={"twist": list(self.twist), "chord": list(self.chord), "problems": problems},
            )
        return self

    def as_dict(self, blade_params) -> Dict[str, float]:
        out = {}
        for node, twist, chord in zip(blade_params.optimizing_nodes, self.twist, self.chord):
            out[f"twist_{node}"] = float(twist)
            out[f"chord_{node}"] = float(chord)
        return out


@dataclass(frozen=True)
class BladeGeometry:
    radii: np.ndarray
    widths: np.ndarray
    twist: np.ndarray  # deg
    chord: np.ndarray
    airfoils: Tuple[str, ...]


def bezier_interpolate(x_knots, y_knots, x) -> np.ndarray:
    """Composite cubic Bezier through every knot.

    Inner control points sit one third along each span with monotone (PCHIP) tangents,
    so flat runs stay flat and no overshoot appears between knots.
    """
    x_knots = np.asarray(x_knots, dtype=float)
    y_knots = np.asarray(y_knots, dtype=float)
    slopes = PchipInterpolator(x_knots, y_knots).derivative()(x_knots)

    x = np.asarray(x, dtype=float)
    seg = np.clip(np.searchsorted(x_knots, x, side="right") - 1, 0, len(x_knots) - 2)
    h = x_knots[seg + 1] - x_knots[seg]
    t = (x - x_knots[seg]) / h
    p0 = y_knots[seg]
    p3 = y_knots[seg + 1]
    p1 = p0 + slopes[seg] * h / 3
    p2 = p3 - slopes[seg + 1] * h / 3
    u = 1 - t
    return u**3 * p0 + 3 * u**2 * t * p1 + 3 * u * t**2 * p2 + t**3 * p3


def blade_geometry(design: BladeDesign, blade_params) -> BladeGeometry:
    """Nodal twist and chord for all 17 nodes.

    Nodes 1-3 keep their tabulated values, optimizing nodes take the design values
    and the remaining nodes come from the Bezier curve through both sets.
    """
    design.validate(blade_params)
    radii = blade_params.radii
    knots = list(FIXED_NODES) + list(blade_params.optimizing_nodes)
    idx = np.array(knots) - 1
    x_knots = radii[idx]

    twist = bezier_interpolate(
        x_knots, np.concatenate([blade_params.twist[: len(FIXED_NODES)], design.twist]), radii
    )
    chord = bezier_interpolate(
        x_knots, np.concatenate([blade_params.chord[: len(FIXED_NODES)], design.chord]), radii
    )
    # knots are reproduced exactly, not to rounding
    twist[idx] = np.concatenate([blade_params.twist[: len(FIXED_NODES)], design.twist])
    chord[idx] = np.concatenate([blade_params.chord[: len(FIXED_NODES)], design.chord])

    return BladeGeometry(
        radii=radii.copy(),
        widths=blade_params.widths.copy(),
        twist=twist,
        chord=chord,
        airfoils=blade_params.airfoils,
    )
