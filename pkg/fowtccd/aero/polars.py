import hashlib
import os
from dataclasses import dataclass
from typing import Dict, Iterable, Optional

import numpy as np

from fowtccd.errors import ScenarioError

DEFAULT_POLAR_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "config", "airfoils")


@dataclass(frozen=True)
class Polar:
    name: str
    alpha: np.ndarray  # deg, strictly increasing over [-180, 180]
    cl: np.ndarray
    cd: np.ndarray

    def lookup(self, alpha_deg):
        a = np.mod(np.asarray(alpha_deg, dtype=float) + 180.0, 360.0) - 180.0
        return np.interp(a, self.alpha, self.cl), np.interp(a, self.alpha, self.cd)


def _viterna(alpha_s, cl_s, cd_s, cd_max):
    s, c = np.sin(alpha_s), np.cos(alpha_s)
    A1 = cd_max / 2
    A2 = (cl_s - cd_max * s * c) * s / c**2
    B1 = cd_max
    B2 = (cd_s - cd_max * s**2) / c

    def fn(alpha):
        sa = np.sin(alpha)
        return A1 * np.sin(2 * alpha) + A2 * np.cos(alpha) ** 2 / sa, B1 * sa**2 + B2 * np.cos(alpha)

    return fn


def extend_polar(alpha, cl, cd, aspect_ratio: float = 10.0, step: float = 2.0):
    """Extrapolate an attached-flow table to +/-180 deg (Viterna-Corrigan).

    Each end of the table is matched by its own Viterna fit up to +/-90 deg; the
    reversed-flow quadrants reuse the fits mirrored, with lift scaled by 0.7 and
    tapered to zero at +/-180 deg.
    """
    alpha = np.asarray(alpha, dtype=float)
    cl = np.asarray(cl, dtype=float)
    cd = np.asarray(cd, dtype=float)
    cd_max = 1.11 + 0.018 * aspect_ratio
    lo, hi = alpha[0], alpha[-1]
    upper = _viterna(np.deg2rad(hi), cl[-1], cd[-1], cd_max)
    lower = _viterna(np.deg2rad(lo), cl[0], cd[0], cd_max)

    def upper_at(a):
        return upper(np.deg2rad(a))

    def lower_at(a):
        return lower(np.deg2rad(a))

    rows = []
    for a in np.arange(-180.0, lo, step):
        if a >= -90:
            rows.append((a, *lower_at(a)))
        elif a >= -180 + hi:
            l_, d_ = upper_at(180 + a)
            rows.append((a, 0.7 * l_, d_))
        else:
            frac = (a + 180) / hi
            l_, d_ = upper_at(hi)
            rows.append((a, 0.7 * frac * l_, frac * d_ + (1 - frac) * cd[np.argmin(np.abs(alpha))]))
    rows.extend(zip(alpha, cl, cd))
    for a in np.arange(hi + step, 180.0 + 1e-9, step):
        if a <= 90:
            rows.append((a, *upper_at(a)))
        elif a <= 180 + lo:
            l_, d_ = lower_at(a - 180)
            rows.append((a, 0.7 * l_, d_))
        else:
            frac = (180 - a) / -lo
            l_, d_ = lower_at(lo)
            rows.append((a, 0.7 * frac * l_, frac * d_ + (1 - frac) * cd[np.argmin(np.abs(alpha))]))
    table = np.array(rows, dtype=float)
    return table[:, 0], table[:, 1], table[:, 2]


def read_polar(path: str, aspect_ratio: float = 10.0) -> Polar:
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except (OSError, ValueError) as e:
        raise ScenarioError(f"Unreadable polar file {path}: {e}", details={"path": path}) from e
    if data.shape[1] != 3 or data.shape[0] < 2 or np.any(np.diff(data[:, 0]) <= 0):
        raise ScenarioError("Polar table must be increasing rows of alpha cl cd", details={"path": path})
    alpha, cl, cd = extend_polar(data[:, 0], data[:, 1], data[:, 2], aspect_ratio=aspect_ratio)
    name = os.path.splitext(os.path.basename(path))[0]
    return Polar(name=name, alpha=alpha, cl=cl, cd=cd)


def load_polars(directory: Optional[str] = None, names: Optional[Iterable[str]] = None) -> Dict[str, Polar]:
    """Read ``<name>.dat`` polar tables, extended to the full circle."""
    directory = directory or DEFAULT_POLAR_DIR
    if names is None:
        names = sorted(os.path.splitext(f)[0] for f in os.listdir(directory) if f.endswith(".dat"))
    polars = {}
    for name in names:
        path = os.path.join(directory, f"{name}.dat")
        if not os.path.exists(path):
            raise ScenarioError(f"Missing polar for airfoil '{name}'", details={"path": path})
        polars[name] = read_polar(path)
    return polars


def polar_digest(polars: Dict[str, Polar]) -> str:
    digest = hashlib.sha1()
    for name in sorted(polars):
        p = polars[name]
        digest.update(name.encode())
        for array in (p.alpha, p.cl, p.cd):
            digest.update(np.ascontiguousarray(array).tobytes())
    return digest.hexdigest()
