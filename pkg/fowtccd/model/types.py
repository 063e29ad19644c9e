from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from fowtccd.errors import InvalidDesignError

# Column order of the state vector used throughout the package. The last slot carries
# the accumulated generator energy so the transcription can report it without an
# extra quadrature.
STATE_NAMES = (
    "x_p",
    "z_p",
    "theta_p",
    "v_x",
    "v_z",
    "omega_y",
    "Omega",
    "theta_b",
    "tau_g",
    "E_g",
)
CONTROL_NAMES = ("theta_b_rate", "tau_g_rate")

N_STATES = len(STATE_NAMES)
N_CONTROLS = len(CONTROL_NAMES)

IX = {name: i for i, name in enumerate(STATE_NAMES)}


@dataclass(frozen=True)
class TowerDesign:
    """Tapered hollow steel tower; d_base is a plant constant, not a design variable."""

    t_base: float
    t_tip: float
    d_tip: float
    l: float
    d_base: float = 6.5

    def validate(self) -> "TowerDesign":
        problems = []
        if not self.t_base > 0:
            problems.append("t_base must be positive")
        if not self.t_tip > 0:
            problems.append("t_tip must be positive")
        if not self.l > 0:
            problems.append("l must be positive")
        if not self.d_tip > 2 * self.t_tip:
            problems.append("inner diameter at the tip is not positive")
        if not self.d_base > 2 * self.t_base:
            problems.append("inner diameter at the base is not positive")
        if problems:
            raise InvalidDesignError(
                "Degenerate tower geometry", details={"tower": self.as_dict(), "problems": problems}
            )
        return self

    def as_dict(self) -> Dict[str, float]:
        return {
            "t_base": self.t_base,
            "t_tip": self.t_tip,
            "d_tip": self.d_tip,
            "l": self.l,
            "d_base": self.d_base,
        }


@dataclass(frozen=True)
class TowerProperties:
    mass: float
    pitch_inertia: float  # about the tower's own centre of gravity
    cog_height: float  # above the tower base
    section_modulus: float  # base annulus


@dataclass(frozen=True)
class RigidBodyInventory:
    m_p: float
    m_t: float
    m_nc: float
    m_r: float
    I_py: float
    I_ty: float
    I_ncy: float
    I_ry: float
    I_rx: float
    d_r: float
    d_nc: float
    D_t: float
    D_r: float

    @property
    def total_mass(self) -> float:
        return self.m_p + self.m_t + self.m_nc + self.m_r

    @property
    def total_pitch_inertia(self) -> float:
        return self.I_py + self.I_ty + self.I_ncy + self.I_ry

    def validate(self) -> "RigidBodyInventory":
        masses = (self.m_p, self.m_t, self.m_nc, self.m_r)
        inertias = (self.I_py, self.I_ty, self.I_ncy, self.I_ry, self.I_rx)
        offsets = (self.d_r, self.d_nc, self.D_t, self.D_r)
        if min(masses) < 0 or min(inertias) < 0 or not np.all(np.isfinite(offsets)):
            raise InvalidDesignError("Invalid rigid-body inventory", details=self.__dict__.copy())
        return self


@dataclass(frozen=True)
class HydroParams:
    C_am: float
    rho: float
    V_d: float
    d_1: float
    a_cv: float
    a_pf: float
    I_add: float
    g: float = 9.81
    waterplane_area: float = 0.0
    waterplane_inertia: float = 0.0

    @property
    def buoyancy_arm(self) -> float:
        """Centre of buoyancy above the platform centre of gravity."""
        return self.a_cv - self.a_pf


@dataclass
class SystemState:
    x_p: float = 0.0
    z_p: float = 0.0
    theta_p: float = 0.0
    v_x: float = 0.0
    v_z: float = 0.0
    omega_y: float = 0.0
    Omega: float = 0.0
    theta_b: float = 0.0
    tau_g: float = 0.0
    E_g: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in STATE_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values) -> "SystemState":
        values = np.asarray(values, dtype=float)
        return cls(**{name: float(values[i]) for i, name in enumerate(STATE_NAMES)})


@dataclass(frozen=True)
class LoadSet:
    """Body-frame surge/heave force, pitch moment and aerodynamic torque."""

    F: Tuple[float, float] = (0.0, 0.0)
    M: float = 0.0
    tau_a: float = 0.0
    tag: str = "total"
    components: Tuple["LoadSet", ...] = field(default=())

    def as_vector(self) -> np.ndarray:
        return np.array([self.F[0], self.F[1], self.M, self.tau_a], dtype=float)

    @classmethod
    def combine(cls, *parts: "LoadSet") -> "LoadSet":
        total = np.sum([part.as_vector() for part in parts], axis=0) if parts else np.zeros(4)
        return cls(
            F=(float(total[0]), float(total[1])),
            M=float(total[2]),
            tau_a=float(total[3]),
            tag="total",
            components=tuple(parts),
        )

    def component(self, tag: str) -> "LoadSet":
        for part in self.components:
            if part.tag == tag:
                return part
        raise KeyError(tag)
