"""Wind climate: Weibull bins, shear correction and deterministic per-bin wind profiles."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from fowtccd.errors import ArgumentError

HOURS_PER_YEAR = 8760.0


@dataclass(frozen=True)
class WindBinSet:
    centers: np.ndarray  # m/s
    probabilities: np.ndarray
    k: float
    c: float

    def __post_init__(self):
        if self.centers.size == 0 or self.centers.shape != self.probabilities.shape:
            raise ArgumentError("Wind bins need matching non-empty centre and probability arrays")
        if np.any(np.diff(self.centers) <= 0):
            raise ArgumentError("Wind bin centres must be strictly increasing", details={"centers": self.centers.tolist()})
        if np.any(self.probabilities < 0):
            raise ArgumentError("Wind bin probabilities must be nonnegative")

    def __len__(self) -> int:
        return int(self.centers.size)

    def __iter__(self):
        return iter(zip(self.centers.tolist(), self.probabilities.tolist()))


def weibull_pdf(u, k: float, c: float):
    u = np.asarray(u, dtype=float)
    return (k / c) * (u / c) ** (k - 1) * np.exp(-((u / c) ** k))


def weibull_bins(k: float = 2.0, c: float = 13.44, start: float = 3.0, stop: float = 25.0, step: float = 1.0) -> WindBinSet:
    """Weibull density at the bin centres start..stop (inclusive), normalised to unit sum.

    Raises:
        ArgumentError: nonpositive shape, scale or step, or an empty range.
    """
    if k <= 0 or c <= 0 or step <= 0:
        raise ArgumentError("Weibull shape, scale and bin step must be positive", details={"k": k, "c": c, "step": step})
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    if stop < start or count < 1:
        raise ArgumentError("Empty wind speed range", details={"start": start, "stop": stop, "step": step})
    centers = start + step * np.arange(count)
    density = weibull_pdf(centers, k, c)
    return WindBinSet(centers=centers, probabilities=density / np.sum(density), k=k, c=c)


def representative_bins(bins: WindBinSet, count: int) -> WindBinSet:
    """Group contiguous bins; each group keeps its total probability at the bin nearest its weighted centre."""
    if count >= len(bins):
        return bins
    if count < 1:
        raise ArgumentError("Need at least one representative bin", details={"count": count})
    centers, probabilities = [], []
    for idx in np.array_split(np.arange(len(bins)), count):
        p = bins.probabilities[idx]
        weighted = float(np.sum(p * bins.centers[idx]) / np.sum(p))
        centers.append(bins.centers[idx][np.argmin(np.abs(bins.centers[idx] - weighted))])
        probabilities.append(np.sum(p))
    probabilities = np.asarray(probabilities)
    return WindBinSet(
        centers=np.asarray(centers, dtype=float),
        probabilities=probabilities / np.sum(probabilities),
        k=bins.k,
        c=bins.c,
    )


def shear_adjust(u_bar, l, z_base: float = 12.4, l_baseline: float = 76.0, exponent: float = 0.2):
    """Power-law shear from the reference hub height to a tower of length l."""
    if np.any(np.asarray(l) <= 0):
        raise ArgumentError("Tower length must be positive", details={"l": np.asarray(l).tolist()})
    return u_bar * ((l + z_base) / (l_baseline + z_base)) ** exponent


@dataclass(frozen=True)
class WindProfile:
    """Mean wind plus a zero-mean sum of sinusoids, smooth in time."""

    u_mean: float
    duration: float
    amplitudes: np.ndarray  # fractions of u_mean
    omegas: np.ndarray
    phases: np.ndarray

    @property
    def offset(self) -> float:
        # mean of the sinusoid sum over [0, duration]
        if self.amplitudes.size == 0:
            return 0.0
        w, p, T = self.omegas, self.phases, self.duration
        return float(np.sum(self.amplitudes * (np.cos(p) - np.cos(w * T + p)) / (w * T)))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        wave = np.sum(self.amplitudes * np.sin(np.outer(t, self.omegas) + self.phases), axis=-1).reshape(t.shape)
        return self.u_mean * (1.0 + wave - self.offset)

    def rate(self, t):
        t = np.asarray(t, dtype=float)
        terms = self.amplitudes * self.omegas * np.cos(np.outer(t, self.omegas) + self.phases)
        return self.u_mean * np.sum(terms, axis=-1).reshape(t.shape)

    def sample(self, dt: float = 0.1) -> Tuple[np.ndarray, np.ndarray]:
        t = np.linspace(0.0, self.duration, int(round(self.duration / dt)) + 1)
        return t, np.asarray(self(t), dtype=float)


def wind_profile(
    u_mean: float,
    duration: float = 100.0,
    seed: int = 0,
    amplitude: float = 0.08,
    components: int = 6,
    period_range: Tuple[float, float] = (8.0, 60.0),
) -> WindProfile:
    """Deterministic wind speed profile for one bin.

    ``amplitude`` bounds the fluctuation as a fraction of u_mean.
    Periods are drawn log-uniformly so they are incommensurate; the template is shifted
    so the average over [0, duration] is exactly u_mean.
    """
    if duration <= 0:
        raise ArgumentError("Wind profile duration must be positive", details={"duration": duration})
    if amplitude <= 0 or components <= 0:
        empty = np.zeros(0)
        return WindProfile(float(u_mean), float(duration), empty, empty, empty)
    rng = np.random.default_rng(seed)
    periods = np.exp(rng.uniform(np.log(period_range[0]), np.log(period_range[1]), components))
    weights = rng.uniform(0.5, 1.0, components)
    return WindProfile(
        u_mean=float(u_mean),
        duration=float(duration),
        amplitudes=0.5 * amplitude * weights / np.sum(weights),
        omegas=2 * np.pi / periods,
        phases=rng.uniform(0.0, 2 * np.pi, components),
    )
