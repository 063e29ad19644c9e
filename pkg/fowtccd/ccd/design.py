"""Plant design vectors for the outer loop: tower only, or tower and blades."""

from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

import numpy as np

from fowtccd.aero.blade import BladeDesign
from fowtccd.errors import ArgumentError, InvalidDesignError
from fowtccd.model.types import TowerDesign

TOWER_VARIABLES = ("t_tip", "d_tip", "t_base", "l")
MODES = ("tower", "tower_blades")


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ArgumentError(f"Unknown design mode {mode!r}", details={"modes": list(MODES)})
    return mode


@dataclass(frozen=True)
class PlantDesign:
    tower: TowerDesign
    blade: BladeDesign
    mode: str = "tower"

    @classmethod
    def baseline(cls, params, mode: str = "tower") -> "PlantDesign":
        tower = replace(params.tower.baseline, d_base=params.tower.base_diameter)
        return cls(tower=tower, blade=BladeDesign.baseline(params.blade), mode=_check_mode(mode))

    @property
    def optimizes_blades(self) -> bool:
        return self.mode == "tower_blades"

    def as_vector(self) -> np.ndarray:
        tower = np.array([getattr(self.tower, name) for name in TOWER_VARIABLES], dtype=float)
        if self.optimizes_blades:
            return np.concatenate([tower, self.blade.as_vector()])
        return tower

    def with_vector(self, values) -> "PlantDesign":
        """Same mode and fixed parts, new design variables."""
        values = np.asarray(values, dtype=float)
        expected = design_dimension(self.mode, len(self.blade.twist))
        if values.size != expected:
            raise ArgumentError("Design vector has the wrong length", details={"expected": expected, "got": values.size})
        tower = replace(self.tower, **{name: float(v) for name, v in zip(TOWER_VARIABLES, values[:4])})
        blade = BladeDesign.from_vector(values[4:]) if self.optimizes_blades else self.blade
        return replace(self, tower=tower, blade=blade)

    def validate(self, params) -> "PlantDesign":
        """Raises InvalidDesignError outside the design box or for degenerate geometry."""
        lower, upper = design_bounds(params, self.mode)
        x = self.as_vector()
        outside = [name for name, v, lo, hi in zip(variable_names(params, self.mode), x, lower, upper) if v < lo or v > hi]
        if outside:
            raise InvalidDesignError("Design outside its bounds", details={"variables": outside, "design": self.as_dict(params)})
        self.tower.validate()
        self.blade.validate(params.blade)
        return self

    def as_dict(self, params) -> Dict[str, float]:
        out = {name: float(getattr(self.tower, name)) for name in TOWER_VARIABLES}
        out.update(self.blade.as_dict(params.blade))
        return out


def design_dimension(mode: str, blade_nodes: int = 5) -> int:
    return 4 + (2 * blade_nodes if _check_mode(mode) == "tower_blades" else 0)


def variable_names(params, mode: str) -> Tuple[str, ...]:
    names = TOWER_VARIABLES
    if _check_mode(mode) == "tower_blades":
        nodes = params.blade.optimizing_nodes
        names = names + tuple(f"twist_{n}" for n in nodes) + tuple(f"chord_{n}" for n in nodes)
    return names


def design_bounds(params, mode: str) -> Tuple[np.ndarray, np.ndarray]:
    box = params.tower.bounds
    lower = [box[name][0] for name in TOWER_VARIABLES]
    upper = [box[name][1] for name in TOWER_VARIABLES]
    if _check_mode(mode) == "tower_blades":
        count = len(params.blade.optimizing_nodes)
        lower += [params.blade.twist_bounds[0]] * count + [params.blade.chord_bounds[0]] * count
        upper += [params.blade.twist_bounds[1]] * count + [params.blade.chord_bounds[1]] * count
    return np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)


class DesignSpace:
    """Affine map between a design box and the unit cube the evolution strategy searches."""

    def __init__(self, params, mode: str = "tower", base: Optional[PlantDesign] = None):
        self.params = params
        self.mode = _check_mode(mode)
        self.base = base or PlantDesign.baseline(params, mode)
        self.lower, self.upper = design_bounds(params, mode)
        self.names = variable_names(params, mode)

    @property
    def dimension(self) -> int:
        return self.lower.size

    def normalize(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / (self.upper - self.lower)

    def denormalize(self, unit) -> np.ndarray:
        return self.lower + np.asarray(unit, dtype=float) * (self.upper - self.lower)

    def design(self, unit) -> PlantDesign:
        return self.base.with_vector(self.denormalize(unit))


def design_from_record(params, record: Dict[str, float], mode: Optional[str] = None) -> PlantDesign:
    """Design from a flat record such as ``PlantDesign.as_dict`` or a comparison table row.

    Missing tower variables keep their baseline value. Without an explicit mode, blade
    entries switch the mode to tower_blades.
    """
    base = PlantDesign.baseline(params)
    unknown = [k for k in record if k not in TOWER_VARIABLES and not k.startswith(("twist_", "chord_"))]
    if unknown:
        raise ArgumentError("Unknown design variables", details={"variables": unknown})
    tower = replace(base.tower, **{name: float(record[name]) for name in TOWER_VARIABLES if name in record})
    nodes = params.blade.optimizing_nodes
    has_blades = any(f"twist_{n}" in record or f"chord_{n}" in record for n in nodes)
    mode = _check_mode(mode) if mode else ("tower_blades" if has_blades else "tower")
    twist = tuple(float(record.get(f"twist_{n}", v)) for n, v in zip(nodes, base.blade.twist))
    chord = tuple(float(record.get(f"chord_{n}", v)) for n, v in zip(nodes, base.blade.chord))
    return PlantDesign(tower=tower, blade=BladeDesign(twist=twist, chord=chord), mode=mode)
