"""(mu/mu_w, lambda)-CMA-ES with rank-one and rank-mu covariance updates and box handling."""

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from fowtccd.errors import ArgumentError, ModelError
from fowtccd.mixins.logger import LoggerMixin

MAX_GENERATIONS = "max_generations"
TOLFUN = "tolfun"
TOLX = "tolx"
CONDITION = "condition"


def default_population(dimension: int) -> int:
    return 4 + int(3 * np.log(dimension))


@dataclass
class CmaParameters:
    """Static strategy parameters."""

    dimension: int
    population: int
    mu: int = field(init=False)
    weights: np.ndarray = field(init=False)
    mueff: float = field(init=False)
    cc: float = field(init=False)
    cs: float = field(init=False)
    c1: float = field(init=False)
    cmu: float = field(init=False)
    damps: float = field(init=False)

    def __post_init__(self):
        N, lam = self.dimension, self.population
        self.mu = lam // 2
        raw = np.log(lam / 2 + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = raw / np.sum(raw)
        self.mueff = 1.0 / np.sum(self.weights**2)
        self.cc = (4 + self.mueff / N) / (N + 4 + 2 * self.mueff / N)
        self.cs = (self.mueff + 2) / (N + self.mueff + 5)
        self.c1 = 2 / ((N + 1.3) ** 2 + self.mueff)
        self.cmu = min(1 - self.c1, 2 * (self.mueff - 2 + 1 / self.mueff) / ((N + 2) ** 2 + self.mueff))
        self.damps = 2 * self.mueff / lam + 0.3 + self.cs


@dataclass
class CmaState:
    mean: np.ndarray
    sigma: float
    C: np.ndarray
    pc: np.ndarray
    ps: np.ndarray
    population: int
    generation: int
    seed: int
    evaluations: int = 0


@dataclass
class CmaResult:
    x: np.ndarray
    f: float
    status: str
    state: CmaState
    history: List[Dict] = field(default_factory=list)
    best_per_generation: List[float] = field(default_factory=list)


class CmaEvolutionStrategy(LoggerMixin):
    """Ask-and-tell CMA-ES; the random stream is owned by the strategy instance.

    Candidates are sampled in the unbounded space. When a box is given, each candidate
    is resampled up to ``resamples`` times while it falls outside; the final sample is
    projected onto the box and its objective gets a quadratic penalty on the distance.
    """

    def __init__(
        self,
        x0,
        sigma0: float,
        population: Optional[int] = None,
        seed: int = 0,
        lower=None,
        upper=None,
        resamples: int = 10,
        bound_penalty: float = 1e2,
        log_file: str = "ccd.log",
    ):
        super().__init__(log_file)
        x0 = np.asarray(x0, dtype=float)
        N = x0.size
        if N < 1 or not sigma0 > 0:
            raise ArgumentError("CMA-ES needs a nonempty start point and a positive step size", details={"sigma0": sigma0})
        population = population or default_population(N)
        if population < 4:
            raise ArgumentError("CMA-ES population must be at least 4", details={"population": population})
        self.params = CmaParameters(N, population)
        self.lower = None if lower is None else np.asarray(lower, dtype=float)
        self.upper = None if upper is None else np.asarray(upper, dtype=float)
        self.resamples = resamples
        self.bound_penalty = bound_penalty
        self.rng = np.random.default_rng(seed)
        self.state = CmaState(
            mean=x0.copy(),
            sigma=float(sigma0),
            C=np.eye(N),
            pc=np.zeros(N),
            ps=np.zeros(N),
            population=population,
            generation=0,
            seed=seed,
        )
        self._eigen()

    def _eigen(self):
        C = 0.5 * (self.state.C + self.state.C.T)
        try:
            np.linalg.cholesky(C)
        except np.linalg.LinAlgError as e:
            raise ModelError("CMA-ES covariance lost positive definiteness", details={"generation": self.state.generation}) from e
        eigenvalues, B = np.linalg.eigh(C)
        self.state.C = C
        self.D = np.sqrt(np.maximum(eigenvalues, 1e-300))
        self.B = B
        self.invsqrt = B @ np.diag(1 / self.D) @ B.T

    def inside(self, x) -> bool:
        if self.lower is None:
            return True
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def ask(self) -> np.ndarray:
        s = self.state
        N = s.mean.size
        candidates = np.empty((s.population, N))
        for k in range(s.population):
            for _ in range(self.resamples + 1):
                z = self.rng.standard_normal(N)
                x = s.mean + s.sigma * (self.B @ (self.D * z))
                if self.inside(x):
                    break
            candidates[k] = x
        return candidates

    def repair(self, x):
        """Projection onto the box and the squared distance it moved."""
        if self.lower is None:
            return x, 0.0
        projected = np.clip(x, self.lower, self.upper)
        return projected, float(np.sum((x - projected) ** 2))

    def tell(self, candidates: np.ndarray, fitness: Iterable[float]) -> None:
        s, p = self.state, self.params
        N = s.mean.size
        fitness = np.asarray(list(fitness), dtype=float)
        s.evaluations += fitness.size
        order = np.argsort(fitness, kind="stable")
        selected = candidates[order[: p.mu]]
        old = s.mean
        s.mean = p.weights @ selected

        y = s.mean - old
        s.ps = (1 - p.cs) * s.ps + np.sqrt(p.cs * (2 - p.cs) * p.mueff) / s.sigma * (self.invsqrt @ y)
        generations = s.generation + 1
        hsig = float(
            np.sum(s.ps**2) / N / (1 - (1 - p.cs) ** (2 * generations)) < 2 + 4.0 / (N + 1)
        )
        s.pc = (1 - p.cc) * s.pc + hsig * np.sqrt(p.cc * (2 - p.cc) * p.mueff) / s.sigma * y

        c1a = p.c1 * (1 - (1 - hsig**2) * p.cc * (2 - p.cc))
        steps = (selected - old) / s.sigma
        s.C = (
            (1 - c1a - p.cmu * np.sum(p.weights)) * s.C
            + p.c1 * np.outer(s.pc, s.pc)
            + p.cmu * (steps.T * p.weights) @ steps
        )
        s.sigma *= float(np.exp(min(1.0, p.cs / p.damps * (np.sum(s.ps**2) / N - 1) / 2)))
        s.generation = generations
        self._eigen()

    def stop(self, fitness, tolfun: float, tolx: float) -> Optional[str]:
        fitness = np.asarray(fitness, dtype=float)
        if fitness.size > 1 and np.max(fitness) - np.min(fitness) < tolfun:
            return TOLFUN
        if self.state.sigma * np.max(self.D) < tolx:
            return TOLX
        if (np.max(self.D) / np.min(self.D)) ** 2 > 1e14:
            return CONDITION
        return None


def cmaes_run(
    objective: Callable[[np.ndarray], float],
    x0,
    sigma0: float,
    population: Optional[int] = None,
    generations: int = 100,
    seed: int = 0,
    lower=None,
    upper=None,
    map_fn: Callable = map,
    value: Callable = float,
    tolfun: float = 1e-15,
    tolx: float = 1e-12,
    evaluate_start: bool = True,
) -> CmaResult:
    """Minimise ``objective`` starting from x0.

    ``map_fn`` evaluates a list of candidates (for example a process pool's map); results
    are consumed in submission order. ``value`` turns an objective result into the number
    being minimised; the raw result is kept in the history under ``info``. The start point
    is evaluated first as generation 0 so that a zero-generation budget returns it as the
    best design.
    """
    es = CmaEvolutionStrategy(x0, sigma0, population=population, seed=seed, lower=lower, upper=upper)
    history: List[Dict] = []
    best_x, best_f = np.asarray(x0, dtype=float).copy(), np.inf
    best_series: List[float] = []

    if evaluate_start:
        start, _ = es.repair(best_x)
        info = objective(start)
        f0 = float(value(info))
        history.append({"generation": 0, "member": 0, "x": start, "f": f0, "bound_violation": 0.0, "info": info})
        best_x, best_f = start, f0
        best_series.append(best_f)

    status = MAX_GENERATIONS
    for _ in range(generations):
        candidates = es.ask()
        repaired = [es.repair(x) for x in candidates]
        results = list(map_fn(objective, [x for x, _ in repaired]))
        fitness = []
        for member, ((x, distance), info) in enumerate(zip(repaired, results)):
            f = float(value(info))
            penalised = f + es.bound_penalty * (1 + abs(f)) * distance if distance > 0 else f
            fitness.append(penalised)
            history.append(
                {
                    "generation": es.state.generation + 1,
                    "member": member,
                    "x": x,
                    "f": f,
                    "bound_violation": distance,
                    "info": info,
                }
            )
            if f < best_f:
                best_x, best_f = x.copy(), f
        es.tell(candidates, fitness)
        best_series.append(best_f)
        es.log_info(
            f"generation {es.state.generation}: best={best_f:.10g} sigma={es.state.sigma:.4g} "
            f"min={min(fitness):.10g} max={max(fitness):.10g}"
        )
        reason = es.stop(fitness, tolfun, tolx)
        if reason:
            status = reason
            break
    return CmaResult(x=best_x, f=best_f, status=status, state=es.state, history=history, best_per_generation=best_series)
