"""Plant parameter set: YAML loading and derived spar hydrostatic quantities."""

import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import yaml

from fowtccd.errors import ScenarioError
from fowtccd.model.types import HydroParams, TowerDesign

DEFAULT_PARAMETERS_PATH = os.path.join(
    os.path.dirname(os.path.dirname(__file__)), "config", "nrel5mw_oc3.yaml"
)

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(3)


@dataclass(frozen=True)
class RotorParameters:
    radius: float
    hub_radius: float
    blades: int
    mass: float
    spin_inertia: float
    pitch_inertia: float
    overhang: float
    hub_offset: float
    rated_speed: float
    omega_floor: float


@dataclass(frozen=True)
class NacelleParameters:
    mass: float
    pitch_inertia: float
    cm_downwind: float


@dataclass(frozen=True)
class TowerParameters:
    steel_density: float
    base_diameter: float
    base_elevation: float
    baseline: TowerDesign
    bounds: Dict[str, Tuple[float, float]]


@dataclass(frozen=True)
class SparGeometry:
    """Axisymmetric spar described by (depth, diameter) stations, depth positive down."""

    depths: np.ndarray
    diameters: np.ndarray
    cog_depth: float
    draft: float
    freeboard: float

    def _segments(self):
        for i in range(len(self.depths) - 1):
            yield self.depths[i], self.depths[i + 1], self.diameters[i], self.diameters[i + 1]

    def diameter_at(self, depth):
        return np.interp(depth, self.depths, self.diameters)

    def _integrate(self, integrand) -> float:
        total = 0.0
        for z0, z1, d0, d1 in self._segments():
            if z1 <= z0:
                continue
            half = 0.5 * (z1 - z0)
            z = 0.5 * (z0 + z1) + half * _GAUSS_X
            d = d0 + (d1 - d0) * (z - z0) / (z1 - z0)
            total += half * float(np.sum(_GAUSS_W * integrand(z, d)))
        return total

    @property
    def displaced_volume(self) -> float:
        return self._integrate(lambda z, d: np.pi * d**2 / 4)

    @property
    def buoyancy_depth(self) -> float:
        return self._integrate(lambda z, d: np.pi * d**2 / 4 * z) / self.displaced_volume

    def displaced_pitch_inertia(self, rho: float) -> float:
        """Pitch inertia of the displaced water about the platform centre of gravity."""
        return rho * self._integrate(
            lambda z, d: np.pi * d**2 / 4 * ((z - self.cog_depth) ** 2 + d**2 / 16)
        )

    @property
    def waterplane_area(self) -> float:
        return float(np.pi * self.diameters[0] ** 2 / 4)

    @property
    def waterplane_inertia(self) -> float:
        return float(np.pi * self.diameters[0] ** 4 / 64)

    @property
    def keel_diameter(self) -> float:
        return float(self.diameters[-1])

    def strips(self, count: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Morison strips as (elevation above the centre of gravity, diameter, width)."""
        edges = np.linspace(0.0, self.draft, count + 1)
        centres = 0.5 * (edges[1:] + edges[:-1])
        widths = np.diff(edges)
        return self.cog_depth - centres, self.diameter_at(centres), widths


@dataclass(frozen=True)
class PlatformParameters:
    structural_mass: float
    fixed_ballast_mass: float
    radius_of_gyration: float
    spar: SparGeometry


@dataclass(frozen=True)
class HydroCoefficients:
    added_mass_coefficient: float
    drag_coefficient: float
    keel_drag_coefficient: float
    strips: int


@dataclass(frozen=True)
class MooringParameters:
    length: float
    weight_in_water: float
    axial_stiffness: float
    anchor_radius: float
    anchor_depth: float
    fairlead_radius: float
    fairlead_depth: float
    azimuths_deg: Tuple[float, ...]
    max_strain: float
    surrogate: Dict


@dataclass(frozen=True)
class BladeParameters:
    radii: np.ndarray
    widths: np.ndarray
    twist: np.ndarray
    chord: np.ndarray
    airfoils: Tuple[str, ...]
    optimizing_nodes: Tuple[int, ...]
    twist_bounds: Tuple[float, float]
    chord_bounds: Tuple[float, float]
    baseline_twist: Tuple[float, ...]
    baseline_chord: Tuple[float, ...]


@dataclass(frozen=True)
class OperatingLimits:
    rotor_speed: Tuple[float, float]
    platform_pitch: Tuple[float, float]  # rad
    blade_pitch: Tuple[float, float]  # rad
    generator_torque: Tuple[float, float]
    blade_pitch_rate: float
    generator_torque_rate: float
    rated_power: float
    surge: Tuple[float, float]
    heave: Tuple[float, float]
    stress_limits: Tuple[float, ...] = (45e6,)  # Pa, first entry is the default

    @property
    def max_stress(self) -> float:
        return self.stress_limits[0]


@dataclass(frozen=True)
class PlantParameters:
    name: str
    gravity: float
    water_density: float
    air_density: float
    rotor: RotorParameters
    nacelle: NacelleParameters
    tower: TowerParameters
    platform: PlatformParameters
    hydro: HydroCoefficients
    mooring: MooringParameters
    blade: BladeParameters
    limits: OperatingLimits
    polar_source: str = ""
    source_path: Optional[str] = None

    def hydro_params(self) -> HydroParams:
        spar = self.platform.spar
        V_d = spar.displaced_volume
        a_pf = spar.draft - spar.cog_depth
        a_cv = spar.draft - spar.buoyancy_depth
        return HydroParams(
            C_am=self.hydro.added_mass_coefficient,
            rho=self.water_density,
            V_d=V_d,
            d_1=spar.keel_diameter,
            a_cv=a_cv,
            a_pf=a_pf,
            I_add=spar.displaced_pitch_inertia(self.water_density),
            g=self.gravity,
            waterplane_area=spar.waterplane_area,
            waterplane_inertia=spar.waterplane_inertia,
        )


def _pair(values) -> Tuple[float, float]:
    lo, hi = (float(v) for v in values)
    if lo > hi:
        raise ScenarioError("Bound pair is not ordered", details={"bounds": [lo, hi]})
    return lo, hi


def load_plant_parameters(path: Optional[str] = None) -> PlantParameters:
    """Load the plant parameter document.

    Args:
        path: YAML file; defaults to the shipped NREL 5 MW / OC3-Hywind set.

    Returns:
        PlantParameters with derived spar geometry.

    Raises:
        ScenarioError: if the file is missing or a required entry is absent/invalid.
    """
    path = path or DEFAULT_PARAMETERS_PATH
    if not os.path.exists(path):
        raise ScenarioError(f"Plant parameter file not found: {path}", details={"path": path})
    with open(path, "r") as f:
        doc = yaml.safe_load(f) or {}

    try:
        env = doc["environment"]
        rot = doc["rotor"]
        nac = doc["nacelle"]
        tow = doc["tower"]
        plat = doc["platform"]
        hyd = doc["hydro"]
        moor = doc["mooring"]
        bld = doc["blade"]
        lim = doc["limits"]

        stations = np.asarray(plat["stations"], dtype=float)
        spar = SparGeometry(
            depths=stations[:, 0],
            diameters=stations[:, 1],
            cog_depth=float(plat["cog_depth"]),
            draft=float(plat["draft"]),
            freeboard=float(plat["freeboard"]),
        )
        baseline = TowerDesign(
            d_base=float(tow["base_diameter"]),
            **{k: float(v) for k, v in tow["baseline"].items()},
        )
        nodes: List = bld["nodes"]
        params = PlantParameters(
            name=doc.get("metadata", {}).get("name", "plant"),
            polar_source=doc.get("metadata", {}).get("polar_source", ""),
            source_path=os.path.abspath(path),
            gravity=float(env["gravity"]),
            water_density=float(env["water_density"]),
            air_density=float(env["air_density"]),
            rotor=RotorParameters(
                radius=float(rot["radius"]),
                hub_radius=float(rot["hub_radius"]),
                blades=int(rot["blades"]),
                mass=float(rot["mass"]),
                spin_inertia=float(rot["spin_inertia"]),
                pitch_inertia=float(rot["pitch_inertia"]),
                overhang=float(rot["overhang"]),
                hub_offset=float(rot["hub_offset"]),
                rated_speed=float(rot["rated_speed"]),
                omega_floor=float(rot["omega_floor"]),
            ),
            nacelle=NacelleParameters(
                mass=float(nac["mass"]),
                pitch_inertia=float(nac["pitch_inertia"]),
                cm_downwind=float(nac["cm_downwind"]),
            ),
            tower=TowerParameters(
                steel_density=float(tow["steel_density"]),
                base_diameter=float(tow["base_diameter"]),
                base_elevation=float(tow["base_elevation"]),
                baseline=baseline.validate(),
                bounds={k: _pair(v) for k, v in tow["bounds"].items()},
            ),
            platform=PlatformParameters(
                structural_mass=float(plat["structural_mass"]),
                fixed_ballast_mass=float(plat["fixed_ballast_mass"]),
                radius_of_gyration=float(plat["radius_of_gyration"]),
                spar=spar,
            ),
            hydro=HydroCoefficients(
                added_mass_coefficient=float(hyd["added_mass_coefficient"]),
                drag_coefficient=float(hyd["drag_coefficient"]),
                keel_drag_coefficient=float(hyd["keel_drag_coefficient"]),
                strips=int(hyd["strips"]),
            ),
            mooring=MooringParameters(
                length=float(moor["line"]["length"]),
                weight_in_water=float(moor["line"]["weight_in_water"]),
                axial_stiffness=float(moor["line"]["axial_stiffness"]),
                anchor_radius=float(moor["anchor_radius"]),
                anchor_depth=float(moor["anchor_depth"]),
                fairlead_radius=float(moor["fairlead_radius"]),
                fairlead_depth=float(moor["fairlead_depth"]),
                azimuths_deg=tuple(float(a) for a in moor["azimuths_deg"]),
                max_strain=float(moor["max_strain"]),
                surrogate=dict(moor["surrogate"]),
            ),
            blade=BladeParameters(
                radii=np.array([n[0] for n in nodes], dtype=float),
                widths=np.array([n[1] for n in nodes], dtype=float),
                twist=np.array([n[2] for n in nodes], dtype=float),
                chord=np.array([n[3] for n in nodes], dtype=float),
                airfoils=tuple(str(n[4]) for n in nodes),
                optimizing_nodes=tuple(int(n) for n in bld["optimizing_nodes"]),
                twist_bounds=_pair(bld["twist_bounds"]),
                chord_bounds=_pair(bld["chord_bounds"]),
                baseline_twist=tuple(float(v) for v in bld["baseline"]["twist"]),
                baseline_chord=tuple(float(v) for v in bld["baseline"]["chord"]),
            ),
            limits=OperatingLimits(
                rotor_speed=_pair(lim["rotor_speed"]),
                platform_pitch=tuple(np.deg2rad(_pair(lim["platform_pitch_deg"]))),
                blade_pitch=tuple(np.deg2rad(_pair(lim["blade_pitch_deg"]))),
                generator_torque=_pair(lim["generator_torque"]),
                blade_pitch_rate=float(lim["blade_pitch_rate"]),
                generator_torque_rate=float(lim["generator_torque_rate"]),
                rated_power=float(lim["rated_power"]),
                surge=_pair(lim["surge"]),
                heave=_pair(lim["heave"]),
                stress_limits=tuple(1e6 * float(v) for v in lim.get("stress_limits_mpa", [45.0])),
            ),
        )
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise ScenarioError(
            f"Invalid plant parameter file {path}: {e}", details={"path": path}
        ) from e

    if len(params.blade.radii) != 17:
        raise ScenarioError("Blade node table must have 17 nodes", details={"path": path})
    return params
