"""Immutable plant context: rigid-body inventory, ballast, matrices and attached models."""

from dataclasses import dataclass, field, replace
from typing import FrozenSet, Optional

import numpy as np

from fowtccd.aero.loads import HubGeometry
from fowtccd.errors import InfeasiblePlantError, ModelError
from fowtccd.model.matrices import assemble_added_mass, assemble_mass_matrix
from fowtccd.model.parameters import PlantParameters
from fowtccd.model.tower import tower_properties
from fowtccd.model.types import HydroParams, RigidBodyInventory, TowerDesign, TowerProperties
from fowtccd.mooring.layout import MooringLayout

ALL_COMPONENTS = frozenset({"hs", "a", "moor", "hd"})


@dataclass(frozen=True)
class MorisonStrips:
    elevation: np.ndarray  # above the platform centre of gravity
    diameter: np.ndarray
    width: np.ndarray
    drag_coefficient: float
    keel_drag_coefficient: float
    keel_area: float
    keel_elevation: float


@dataclass(frozen=True)
class PlantModel:
    params: PlantParameters
    tower: TowerDesign
    tower_props: TowerProperties
    inventory: RigidBodyInventory
    hydro: HydroParams
    M_sys: np.ndarray
    A_bar: np.ndarray
    Minv: np.ndarray
    strips: MorisonStrips
    layout: MooringLayout
    ballast: float
    surface: object = None
    surrogate: object = None
    blade: object = None
    components: FrozenSet[str] = field(default=ALL_COMPONENTS)
    wave_depth: float = 0.0

    @property
    def rotor_radius(self) -> float:
        return self.params.rotor.radius

    @property
    def hub(self) -> HubGeometry:
        return HubGeometry(elevation=self.inventory.D_r, overhang=self.inventory.d_r)

    @property
    def A_11(self) -> float:
        return float(self.A_bar[0, 0])

    @property
    def section_modulus(self) -> float:
        return self.tower_props.section_modulus

    def has(self, component: str) -> bool:
        if component == "a" and self.surface is None:
            return False
        if component == "moor" and self.surrogate is None:
            return False
        return component in self.components

    def with_components(self, components) -> "PlantModel":
        return replace(self, components=frozenset(components))


def rigid_body_inventory(params: PlantParameters, tower: TowerDesign, props: TowerProperties, m_p: float) -> RigidBodyInventory:
    spar = params.platform.spar
    base = spar.cog_depth + params.tower.base_elevation
    return RigidBodyInventory(
        m_p=m_p,
        m_t=props.mass,
        m_nc=params.nacelle.mass,
        m_r=params.rotor.mass,
        I_py=m_p * params.platform.radius_of_gyration**2,
        I_ty=props.pitch_inertia,
        I_ncy=params.nacelle.pitch_inertia,
        I_ry=params.rotor.pitch_inertia,
        I_rx=params.rotor.spin_inertia,
        d_r=params.rotor.overhang,
        d_nc=params.nacelle.cm_downwind,
        D_t=base + props.cog_height,
        D_r=base + tower.l + params.rotor.hub_offset,
    ).validate()


def static_mooring_pretension(params: PlantParameters, surrogate) -> float:
    """Net downward mooring force at the design pose [N]; zero without a line model."""
    if surrogate is None:
        return 0.0
    layout = MooringLayout.from_parameters(params)
    _, F_z, _ = layout.loads(0.0, 0.0, 0.0, surrogate.forces)
    return float(-F_z)


def ballast_equilibrium(params: PlantParameters, tower_mass: float, pretension: float = 0.0) -> float:
    """Variable ballast [kg] that floats the plant at its design draught.

    Buoyancy of the displaced volume balances the turbine, the platform and the static
    vertical mooring pull.

    Raises:
        InfeasiblePlantError: if the turbine is too heavy for any ballast to work.
    """
    rho = params.water_density
    V_d = params.platform.spar.displaced_volume
    m_p = rho * V_d - (tower_mass + params.nacelle.mass + params.rotor.mass) - pretension / params.gravity
    ballast = m_p - params.platform.structural_mass - params.platform.fixed_ballast_mass
    if ballast < 0:
        raise InfeasiblePlantError(
            "Negative variable ballast required",
            details={"ballast": ballast, "tower_mass": tower_mass, "pretension": pretension},
        )
    return float(ballast)


def build_plant_model(
    params: PlantParameters,
    tower: Optional[TowerDesign] = None,
    surface=None,
    surrogate=None,
    blade=None,
    components=ALL_COMPONENTS,
    wave_depth: Optional[float] = None,
) -> PlantModel:
    """Assemble the immutable plant context used by the derivative field.

    Raises:
        InvalidDesignError: degenerate tower.
        InfeasiblePlantError: negative ballast.
        ModelError: generalized mass matrix not positive definite.
    """
    tower = tower or params.tower.baseline
    tower = replace(tower, d_base=params.tower.base_diameter).validate()
    props = tower_properties(tower, params.tower.steel_density)

    pretension = static_mooring_pretension(params, surrogate)
    ballast = ballast_equilibrium(params, props.mass, pretension)
    m_p = params.platform.structural_mass + params.platform.fixed_ballast_mass + ballast
    inventory = rigid_body_inventory(params, tower, props, m_p)

    hydro = params.hydro_params()
    M_sys = assemble_mass_matrix(inventory)
    A_bar = assemble_added_mass(hydro)
    total = M_sys + A_bar
    try:
        np.linalg.cholesky(total)
    except np.linalg.LinAlgError as e:
        raise ModelError(
            "Generalized mass matrix is not positive definite",
            details={"eigenvalues": np.linalg.eigvalsh(total).tolist()},
        ) from e
    Minv = np.linalg.inv(total)

    spar = params.platform.spar
    z_i, d_i, w_i = spar.strips(params.hydro.strips)
    strips = MorisonStrips(
        elevation=z_i,
        diameter=d_i,
        width=w_i,
        drag_coefficient=params.hydro.drag_coefficient,
        keel_drag_coefficient=params.hydro.keel_drag_coefficient,
        keel_area=float(np.pi * spar.keel_diameter**2 / 4),
        keel_elevation=spar.cog_depth - spar.draft,
    )

    return PlantModel(
        params=params,
        tower=tower,
        tower_props=props,
        inventory=inventory,
        hydro=hydro,
        M_sys=M_sys,
        A_bar=A_bar,
        Minv=Minv,
        strips=strips,
        layout=MooringLayout.from_parameters(params),
        ballast=ballast,
        surface=surface,
        surrogate=surrogate,
        blade=blade,
        components=frozenset(components),
        wave_depth=spar.buoyancy_depth if wave_depth is None else wave_depth,
    )

