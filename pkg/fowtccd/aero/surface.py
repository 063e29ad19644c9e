"""Tabulated Cp/Ct surfaces with a differentiable bicubic interpolant and an HDF5 cache."""

import hashlib
import os
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import autograd.numpy as anp
import h5py
import numpy as np
from autograd.extend import defvjp, primitive
from autograd.tracer import getval
from scipy.interpolate import RectBivariateSpline

from fowtccd.aero.bem import BEM_MODEL, bem_solve
from fowtccd.aero.blade import BladeGeometry
from fowtccd.aero.polars import Polar, polar_digest
from fowtccd.errors import ScenarioError

BETZ_LIMIT = 16.0 / 27.0
DEFAULT_TSR_GRID = np.arange(1.0, 15.0 + 1e-9, 0.25)
DEFAULT_PITCH_GRID = np.arange(0.0, 40.0 + 1e-9, 1.0)


@primitive
def _surface_ev(spline, x, y, dx, dy):
    if dx > spline.degrees[0] - 1 or dy > spline.degrees[1] - 1:
        return np.zeros(np.shape(x))
    return spline.ev(x, y, dx=dx, dy=dy)


defvjp(
    _surface_ev,
    lambda ans, spline, x, y, dx, dy: lambda g: g * _surface_ev(spline, x, y, dx + 1, dy),
    lambda ans, spline, x, y, dx, dy: lambda g: g * _surface_ev(spline, x, y, dx, dy + 1),
    argnums=(1, 2),
)


@dataclass
class CoefficientSurface:
    tsr: np.ndarray
    pitch: np.ndarray  # deg
    cp: np.ndarray  # (len(tsr), len(pitch))
    ct: np.ndarray
    diagnostics: Dict[str, int] = field(default_factory=dict)
    _splines: Optional[Tuple] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.tsr = np.asarray(self.tsr, dtype=float)
        self.pitch = np.asarray(self.pitch, dtype=float)
        self.cp = np.asarray(self.cp, dtype=float).reshape(self.tsr.size, self.pitch.size)
        self.ct = np.asarray(self.ct, dtype=float).reshape(self.tsr.size, self.pitch.size)
        for name, grid in (("tsr", self.tsr), ("pitch", self.pitch)):
            if grid.size > 1 and np.any(np.diff(grid) <= 0):
                raise ScenarioError(f"Surface {name} grid must be strictly increasing")
        self.diagnostics.setdefault("hull_clamps", 0)

    @property
    def splines(self):
        if self._splines is None:
            kx = min(3, self.tsr.size - 1)
            ky = min(3, self.pitch.size - 1)
            if kx < 1 or ky < 1:
                self._splines = ()
            else:
                self._splines = (
                    RectBivariateSpline(self.tsr, self.pitch, self.cp, kx=kx, ky=ky, s=0),
                    RectBivariateSpline(self.tsr, self.pitch, self.ct, kx=kx, ky=ky, s=0),
                )
        return self._splines

    def clamp(self, tsr, pitch_deg):
        raw_x, raw_y = getval(tsr), getval(pitch_deg)
        outside = (
            (raw_x < self.tsr[0]) | (raw_x > self.tsr[-1]) | (raw_y < self.pitch[0]) | (raw_y > self.pitch[-1])
        )
        self.diagnostics["hull_clamps"] += int(np.sum(outside))
        return (
            anp.clip(tsr, self.tsr[0], self.tsr[-1]),
            anp.clip(pitch_deg, self.pitch[0], self.pitch[-1]),
        )

    def coefficients(self, tsr, pitch_deg):
        """Batched (Cp, Ct); continuously differentiable inside the grid hull."""
        x, y = self.clamp(tsr, pitch_deg)
        if not self.splines:
            # single-point grid
            ones = anp.ones_like(x) if np.ndim(getval(x)) else 1.0
            return self.cp[0, 0] * ones, self.ct[0, 0] * ones
        cp_spline, ct_spline = self.splines
        return _surface_ev(cp_spline, x, y, 0, 0), _surface_ev(ct_spline, x, y, 0, 0)


def eval_surface(surface: CoefficientSurface, tsr, pitch_deg) -> Tuple:
    """Interpolated (Cp, Ct); out-of-hull queries are clamped and counted in diagnostics."""
    x, y = np.broadcast_arrays(np.asarray(tsr, dtype=float), np.asarray(pitch_deg, dtype=float))
    cp, ct = surface.coefficients(x.astype(float), y.astype(float))
    if np.ndim(cp) == 0:
        return float(cp), float(ct)
    return cp, ct


def build_coefficient_surface(
    geometry: BladeGeometry,
    polars: Dict[str, Polar],
    blades: int,
    radius: float,
    hub_radius: float,
    tsr_grid=DEFAULT_TSR_GRID,
    pitch_grid=DEFAULT_PITCH_GRID,
    logger=None,
) -> CoefficientSurface:
    """Tabulate BEM Cp/Ct on the grid, clamped to [0, 16/27) and [0, inf)."""
    tsr_grid = np.asarray(tsr_grid, dtype=float)
    pitch_grid = np.asarray(pitch_grid, dtype=float)
    L, P = np.meshgrid(tsr_grid, pitch_grid, indexing="ij")
    result = bem_solve(geometry, polars, L, P, blades, radius, hub_radius, logger=logger)

    cp_hi = np.nextafter(BETZ_LIMIT, 0.0)
    clamps = {
        "cp_low": int(np.sum(result.cp < 0)),
        "cp_high": int(np.sum(result.cp > cp_hi)),
        "ct_low": int(np.sum(result.ct < 0)),
        "unconverged": result.unconverged,
    }
    if logger is not None and (clamps["cp_low"] or clamps["cp_high"] or clamps["ct_low"]):
        logger.info(f"Coefficient surface clamps: {clamps}")
    return CoefficientSurface(
        tsr=tsr_grid,
        pitch=pitch_grid,
        cp=np.clip(result.cp, 0.0, cp_hi),
        ct=np.maximum(result.ct, 0.0),
        diagnostics=clamps,
    )


def surface_key(geometry: BladeGeometry, polars: Dict[str, Polar], tsr_grid, pitch_grid, blades: int, radius: float) -> str:
    digest = hashlib.sha1()
    for array in (geometry.twist, geometry.chord, geometry.radii, np.asarray(tsr_grid, float), np.asarray(pitch_grid, float)):
        digest.update(np.ascontiguousarray(array, dtype=float).tobytes())
    digest.update(f"{BEM_MODEL}:{blades}:{radius!r}:{','.join(geometry.airfoils)}".encode())
    digest.update(polar_digest(polars).encode())
    return digest.hexdigest()


def cached_coefficient_surface(
    cache_path: Optional[str],
    geometry: BladeGeometry,
    polars: Dict[str, Polar],
    blades: int,
    radius: float,
    hub_radius: float,
    tsr_grid=DEFAULT_TSR_GRID,
    pitch_grid=DEFAULT_PITCH_GRID,
    logger=None,
) -> CoefficientSurface:
    """Build a surface or reuse the one stored under its design hash in an HDF5 file."""
    if not cache_path:
        return build_coefficient_surface(geometry, polars, blades, radius, hub_radius, tsr_grid, pitch_grid, logger)

    key = surface_key(geometry, polars, tsr_grid, pitch_grid, blades, radius)
    if os.path.exists(cache_path):
        with h5py.File(cache_path, "r") as f:
            if key in f:
                group = f[key]
                if logger is not None:
                    logger.debug(f"Coefficient surface cache hit {key}")
                return CoefficientSurface(
                    tsr=group["tsr"][()],
                    pitch=group["pitch"][()],
                    cp=group["cp"][()],
                    ct=group["ct"][()],
                    diagnostics={k: int(v) for k, v in group.attrs.items()},
                )

    surface = build_coefficient_surface(geometry, polars, blades, radius, hub_radius, tsr_grid, pitch_grid, logger)
    os.makedirs(os.path.dirname(os.path.abspath(cache_path)), exist_ok=True)
    with h5py.File(cache_path, "a") as f:
        if key not in f:
            group = f.create_group(key)
            for name in ("tsr", "pitch", "cp", "ct"):
                group.create_dataset(name, data=getattr(surface, name))
            for k, v in surface.diagnostics.items():
                group.attrs[k] = int(v)
    return surface
