from dataclasses import dataclass
from typing import Callable, Tuple

import autograd.numpy as anp
import numpy as np
from autograd.tracer import getval

from fowtccd.model.types import LoadSet
from fowtccd.mooring.catenary import LineProperties, solve_catenary


def _per_line(value):
    return value[..., None] if np.ndim(getval(value)) else value


@dataclass(frozen=True)
class MooringLayout:
    """Radial line layout; fairlead elevations are measured from the platform centre of gravity."""

    azimuths: np.ndarray  # rad
    fairlead_radius: float
    fairlead_elevation: float
    anchor_radius: float
    anchor_depth: float
    cog_depth: float

    @classmethod
    def from_parameters(cls, params) -> "MooringLayout":
        mooring = params.mooring
        cog_depth = params.platform.spar.cog_depth
        return cls(
            azimuths=np.deg2rad(np.asarray(mooring.azimuths_deg, dtype=float)),
            fairlead_radius=mooring.fairlead_radius,
            fairlead_elevation=cog_depth - mooring.fairlead_depth,
            anchor_radius=mooring.anchor_radius,
            anchor_depth=mooring.anchor_depth,
            cog_depth=cog_depth,
        )

    def offsets(self, x_p, z_p, theta_p):
        """Per-line (l, h) anchor-to-fairlead offsets and the horizontal direction cosine.

        Inputs broadcast; outputs carry a trailing line axis.
        """
        x_p, z_p, theta_p = _per_line(x_p), _per_line(z_p), _per_line(theta_p)
        s, c = anp.sin(theta_p), anp.cos(theta_p)
        r_x = self.fairlead_radius * np.cos(self.azimuths)
        dy = (self.anchor_radius - self.fairlead_radius) * np.sin(self.azimuths)
        x_f = x_p + r_x * c + self.fairlead_elevation * s
        z_f = -self.cog_depth + z_p - r_x * s + self.fairlead_elevation * c
        dx = self.anchor_radius * np.cos(self.azimuths) - x_f
        l = anp.sqrt(dx**2 + dy**2)
        h = z_f + self.anchor_depth
        return l, h, dx / l

    def loads(self, x_p, z_p, theta_p, line_forces: Callable) -> Tuple:
        """Body-frame (F_x, F_z, M) summed over lines for force model ``line_forces(l, h)``."""
        l, h, cos_x = self.offsets(x_p, z_p, theta_p)
        F_H, F_V = line_forces(l, h)
        F_x = anp.sum(F_H * cos_x, axis=-1)
        F_z = -anp.sum(F_V, axis=-1)
        s, c = anp.sin(theta_p), anp.cos(theta_p)
        F_bx = c * F_x - s * F_z
        F_bz = s * F_x + c * F_z
        # per-line moments about the centre of gravity, body frame
        r_x = self.fairlead_radius * np.cos(self.azimuths)
        s_l, c_l = _per_line(s), _per_line(c)
        line_bx = c_l * F_H * cos_x + s_l * F_V
        line_bz = s_l * F_H * cos_x - c_l * F_V
        M = anp.sum(self.fairlead_elevation * line_bx - r_x * line_bz, axis=-1)
        return F_bx, F_bz, M


def exact_line_forces(line: LineProperties):
    def forces(l, h):
        l_arr, h_arr = np.broadcast_arrays(np.asarray(l, dtype=float), np.asarray(h, dtype=float))
        F_H = np.empty(l_arr.shape)
        F_V = np.empty(l_arr.shape)
        for idx in np.ndindex(l_arr.shape):
            result = solve_catenary(float(l_arr[idx]), float(h_arr[idx]), line)
            F_H[idx], F_V[idx] = result.F_H, result.F_V
        return F_H, F_V

    return forces


def mooring_loads(x_p: float, z_p: float, theta_p: float, layout: MooringLayout, surrogate) -> LoadSet:
    """Mooring load on the platform from the surrogate line model.

    Raises:
        ExtrapolationError: if any fairlead leaves the surrogate training domain.
    """
    F_x, F_z, M = layout.loads(x_p, z_p, theta_p, surrogate.forces)
    return LoadSet(F=(float(F_x), float(F_z)), M=float(M), tag="moor")


def exact_mooring_loads(x_p: float, z_p: float, theta_p: float, layout: MooringLayout, line: LineProperties) -> LoadSet:
    F_x, F_z, M = layout.loads(x_p, z_p, theta_p, exact_line_forces(line))
    return LoadSet(F=(float(F_x), float(F_z)), M=float(M), tag="moor")
