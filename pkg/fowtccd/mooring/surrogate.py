"""Per-regime multilayer perceptron surrogate of the catenary fairlead forces."""

import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import autograd.numpy as anp
import numpy as np
from autograd import grad
from autograd.tracer import getval
from scipy.optimize import minimize

from fowtccd.errors import ExtrapolationError, SurrogateFormatError, TrainingFailure
from fowtccd.mixins.logger import LoggerMixin
from fowtccd.mooring.catenary import SUSPENDED, SEABED, LineProperties, regime_boundary, solve_catenary

FORMAT_HEADER = "fowtccd-mooring-surrogate v1"
REGIMES = (SUSPENDED, SEABED)
RELATIVE_FLOOR = 0.05  # of the largest force magnitude in the sample


def _scale(values, lo, hi):
    return 2 * (values - lo) / (hi - lo) - 1


def _unscale(values, lo, hi):
    return lo + 0.5 * (values + 1) * (hi - lo)


@dataclass
class MlpNetwork:
    """Fully connected network with min-max normalised inputs and outputs."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]
    x_min: np.ndarray
    x_max: np.ndarray
    y_min: np.ndarray
    y_max: np.ndarray
    activation: str = "tanh"

    @property
    def layer_sizes(self) -> List[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def forward(self, X):
        """Evaluate on rows of X; written with autograd numpy so it can be differentiated."""
        a = _layers(_scale(X, self.x_min, self.x_max), self.weights, self.biases, self.activation)
        return _unscale(a, self.y_min, self.y_max)


def _layers(a, weights, biases, activation):
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        a = anp.dot(a, W) + b
        if i < last:
            a = anp.tanh(a) if activation == "tanh" else anp.maximum(a, 0.0)
    return a


@dataclass
class MooringSurrogate:
    suspended: MlpNetwork
    seabed: MlpNetwork
    domain: Tuple[Tuple[float, float], Tuple[float, float]]
    boundary_h: np.ndarray
    boundary_l: np.ndarray
    line: LineProperties
    report: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def network(self, regime: str) -> MlpNetwork:
        return self.suspended if regime == SUSPENDED else self.seabed

    def boundary(self, h):
        return np.interp(h, self.boundary_h, self.boundary_l)

    def check_domain(self, l, h) -> None:
        l = np.asarray(getval(l), dtype=float)
        h = np.asarray(getval(h), dtype=float)
        (l_lo, l_hi), (h_lo, h_hi) = self.domain
        if np.any(l < l_lo) or np.any(l > l_hi) or np.any(h < h_lo) or np.any(h > h_hi):
            raise ExtrapolationError(
                "Mooring surrogate queried outside its training domain",
                details={
                    "l": [float(np.min(l)), float(np.max(l))],
                    "h": [float(np.min(h)), float(np.max(h))],
                    "domain": {"l": list(self.domain[0]), "h": list(self.domain[1])},
                },
            )

    def forces(self, l, h):
        """Batched (F_H, F_V) for arrays of offsets; differentiable in l and h."""
        self.check_domain(l, h)
        suspended = np.asarray(getval(l)) > self.boundary(np.asarray(getval(h)))
        X = anp.stack([l, h], axis=-1)
        Y = anp.where(suspended[..., None], self.suspended.forward(X), self.seabed.forward(X))
        return Y[..., 0], Y[..., 1]


def eval_surrogate(surrogate: MooringSurrogate, l: float, h: float) -> Tuple[float, float]:
    """Fairlead forces from the regime-selected network.

    Raises:
        ExtrapolationError: outside the training domain.
    """
    F_H, F_V = surrogate.forces(np.atleast_1d(float(l)), np.atleast_1d(float(h)))
    return float(F_H[0]), float(F_V[0])


def _linear_fit(X, Y):
    A = np.hstack([X, np.ones((X.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    return [coef[:-1]], [coef[-1]]


def max_relative_error(predicted, exact, floor: float = RELATIVE_FLOOR) -> np.ndarray:
    """Per-output max of the pointwise error |predicted - exact| / |exact|.

    Exact values smaller than ``floor`` times the largest magnitude of that output are
    measured against that floor instead of their own size.
    """
    exact = np.asarray(exact, dtype=float)
    largest = np.max(np.abs(exact), axis=0)
    largest = np.where(largest > 0, largest, 1.0)
    scale = np.maximum(np.abs(exact), floor * largest)
    return np.max(np.abs(np.asarray(predicted, dtype=float) - exact) / scale, axis=0)


def fit_network(
    X: np.ndarray,
    Y: np.ndarray,
    X_val: np.ndarray,
    Y_val: np.ndarray,
    hidden: Sequence[int] = (16, 16),
    activation: str = "tanh",
    seed: int = 0,
    chunk: int = 200,
    max_chunks: int = 30,
    patience: int = 4,
) -> Tuple[MlpNetwork, np.ndarray]:
    """Fit one network, keeping the weights with the lowest held-out error.

    L-BFGS runs in warm-started chunks; training stops once the validation error has
    not improved for ``patience`` chunks. With no hidden layers the network is the
    least-squares affine map.
    """
    x_min, x_max = X.min(axis=0), X.max(axis=0)
    y_min, y_max = Y.min(axis=0), Y.max(axis=0)
    y_max = np.where(y_max > y_min, y_max, y_min + 1.0)
    Xn = _scale(X, x_min, x_max)
    Yn = _scale(Y, y_min, y_max)

    def build(weights, biases):
        return MlpNetwork(
            weights=[np.array(w, dtype=float) for w in weights],
            biases=[np.array(b, dtype=float) for b in biases],
            x_min=x_min,
            x_max=x_max,
            y_min=y_min,
            y_max=y_max,
            activation=activation,
        )

    if len(hidden) == 0:
        net = build(*_linear_fit(Xn, Yn))
        return net, max_relative_error(net.forward(X_val), Y_val)

    # Glorot-uniform weights, zero biases, flattened into one parameter vector
    rng = np.random.default_rng(seed)
    sizes = [X.shape[1], *hidden, Y.shape[1]]
    shapes = list(zip(sizes[:-1], sizes[1:]))
    blocks = []
    for n_in, n_out in shapes:
        bound = np.sqrt(6.0 / (n_in + n_out))
        blocks += [rng.uniform(-bound, bound, n_in * n_out), np.zeros(n_out)]
    theta = np.concatenate(blocks)

    def unpack(flat):
        weights, biases, start = [], [], 0
        for n_in, n_out in shapes:
            weights.append(anp.reshape(flat[start : start + n_in * n_out], (n_in, n_out)))
            start += n_in * n_out
            biases.append(flat[start : start + n_out])
            start += n_out
        return weights, biases

    def loss(flat):
        weights, biases = unpack(flat)
        return anp.mean((_layers(Xn, weights, biases, activation) - Yn) ** 2)

    gradient = grad(loss)
    best, best_error, stale = None, None, 0
    for _ in range(max_chunks):
        theta = minimize(loss, theta, jac=gradient, method="L-BFGS-B", options={"maxiter": chunk}).x
        candidate = build(*unpack(theta))
        error = max_relative_error(candidate.forward(X_val), Y_val)
        if best_error is None or np.max(error) < np.max(best_error):
            best, best_error, stale = candidate, error, 0
        else:
            stale += 1
            if stale >= patience:
                break
    return best, best_error


def sample_forces(line: LineProperties, points: np.ndarray):
    """Exact (F_H, F_V) and regime for each (l, h) row."""
    forces = np.empty_like(points)
    regimes = []
    for i, (l, h) in enumerate(points):
        result = solve_catenary(l, h, line)
        forces[i] = (result.F_H, result.F_V)
        regimes.append(result.regime)
    return forces, np.array(regimes)


class SurrogateTrainer(LoggerMixin):
    """Trains the suspended and seabed networks on exact catenary samples."""

    def __init__(
        self,
        line: LineProperties,
        domain: Tuple[Tuple[float, float], Tuple[float, float]],
        training_samples: int = 1600,
        validation_samples: int = 400,
        hidden: Sequence[int] = (16, 16),
        activation: str = "tanh",
        seed: int = 0,
        max_relative_error: float = 0.01,
        overlap: float = 2.0,
        log_file: str = "mooring.log",
    ):
        super().__init__(log_file)
        self.line = line
        self.domain = (tuple(domain[0]), tuple(domain[1]))
        self.training_samples = training_samples
        self.validation_samples = validation_samples
        self.hidden = tuple(hidden)
        self.activation = activation
        self.seed = seed
        self.max_relative_error = max_relative_error
        self.overlap = overlap

    def _points(self, rng, count):
        (l_lo, l_hi), (h_lo, h_hi) = self.domain
        return np.column_stack([rng.uniform(l_lo, l_hi, count), rng.uniform(h_lo, h_hi, count)])

    def train(self) -> MooringSurrogate:
        rng = np.random.default_rng(self.seed)
        h_lo, h_hi = self.domain[1]
        boundary_h = np.linspace(h_lo, h_hi, 41)
        boundary_l = np.array([regime_boundary(h, self.line) for h in boundary_h])

        train_x = self._points(rng, self.training_samples)
        val_x = self._points(rng, self.validation_samples)
        train_y, _ = sample_forces(self.line, train_x)
        val_y, _ = sample_forces(self.line, val_x)

        train_side = train_x[:, 0] - np.interp(train_x[:, 1], boundary_h, boundary_l)
        val_side = val_x[:, 0] - np.interp(val_x[:, 1], boundary_h, boundary_l)

        networks, report, failed = {}, {}, []
        for regime in REGIMES:
            # each network also sees a band of samples across the boundary
            if regime == SUSPENDED:
                fit_mask, val_mask = train_side > -self.overlap, val_side > 0
            else:
                fit_mask, val_mask = train_side < self.overlap, val_side <= 0
            if fit_mask.sum() < 10 or val_mask.sum() < 1:
                raise TrainingFailure(
                    f"Too few samples in the {regime} regime",
                    details={"regime": regime, "training": int(fit_mask.sum()), "validation": int(val_mask.sum())},
                )
            self.log_info(
                f"Training {regime} network {self.hidden} on {int(fit_mask.sum())} samples "
                f"({int(val_mask.sum())} held out)"
            )
            net, error = fit_network(
                train_x[fit_mask],
                train_y[fit_mask],
                val_x[val_mask],
                val_y[val_mask],
                hidden=self.hidden,
                activation=self.activation,
                seed=self.seed,
            )
            networks[regime] = net
            report[regime] = {"F_H": float(error[0]), "F_V": float(error[1])}
            self.log_info(f"{regime} max relative error F_H={error[0]:.3e} F_V={error[1]:.3e}")
            if np.max(error) > self.max_relative_error:
                failed.append(regime)

        if failed:
            self.log_error(f"Surrogate training failed for {failed}: {report}")
            raise TrainingFailure(
                "Mooring surrogate validation error above threshold",
                details={"report": report, "threshold": self.max_relative_error, "hidden": list(self.hidden)},
            )

        return MooringSurrogate(
            suspended=networks[SUSPENDED],
            seabed=networks[SEABED],
            domain=self.domain,
            boundary_h=boundary_h,
            boundary_l=boundary_l,
            line=self.line,
            report=report,
        )


def train_surrogate(
    line: LineProperties,
    domain,
    training_samples: int = 1600,
    validation_samples: int = 400,
    hidden: Sequence[int] = (16, 16),
    activation: str = "tanh",
    seed: int = 0,
    max_relative_error: float = 0.01,
) -> MooringSurrogate:
    trainer = SurrogateTrainer(
        line,
        domain,
        training_samples=training_samples,
        validation_samples=validation_samples,
        hidden=hidden,
        activation=activation,
        seed=seed,
        max_relative_error=max_relative_error,
    )
    return trainer.train()


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def _write_network(lines: List[str], regime: str, net: MlpNetwork) -> None:
    lines.append(f"network {regime}")
    lines.append(f"activation {net.activation}")
    lines.append("layers " + " ".join(str(n) for n in net.layer_sizes))
    for key in ("x_min", "x_max", "y_min", "y_max"):
        lines.append(f"{key} {_fmt(getattr(net, key))}")
    for W, b in zip(net.weights, net.biases):
        for row in W:
            lines.append(_fmt(row))
        lines.append(_fmt(b))


def save_surrogate(surrogate: MooringSurrogate, path: str) -> str:
    """Write the versioned flat text format; floats are stored with repr so reloads are exact."""
    line = surrogate.line
    (l_lo, l_hi), (h_lo, h_hi) = surrogate.domain
    lines = [
        FORMAT_HEADER,
        f"line {_fmt([line.length, line.weight, line.stiffness, line.max_strain])}",
        f"domain {_fmt([l_lo, l_hi, h_lo, h_hi])}",
        f"boundary {len(surrogate.boundary_h)}",
    ]
    for h, l in zip(surrogate.boundary_h, surrogate.boundary_l):
        lines.append(_fmt([h, l]))
    for regime in REGIMES:
        report = surrogate.report.get(regime, {})
        lines.append(f"error {regime} {_fmt([report.get('F_H', np.nan), report.get('F_V', np.nan)])}")
    for regime in REGIMES:
        _write_network(lines, regime, surrogate.network(regime))
    lines.append("end")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    return path


class _Reader:
    def __init__(self, path: str):
        self.path = path
        with open(path, "r") as f:
            self.lines = [ln.strip() for ln in f if ln.strip()]
        self.pos = 0

    def next(self) -> str:
        if self.pos >= len(self.lines):
            raise SurrogateFormatError("Unexpected end of surrogate file", details={"path": self.path})
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def keyed(self, key: str) -> List[str]:
        parts = self.next().split()
        if not parts or parts[0] != key:
            raise SurrogateFormatError(
                f"Expected '{key}' at line {self.pos}", details={"path": self.path, "found": parts[:1]}
            )
        return parts[1:]

    def floats(self, count: Optional[int] = None) -> np.ndarray:
        values = np.array([float(v) for v in self.next().split()])
        if count is not None and values.size != count:
            raise SurrogateFormatError(
                f"Expected {count} values at line {self.pos}", details={"path": self.path}
            )
        return values


def _read_network(reader: _Reader, regime: str) -> MlpNetwork:
    found = reader.keyed("network")
    if found != [regime]:
        raise SurrogateFormatError(f"Expected network {regime}", details={"path": reader.path, "found": found})
    activation = reader.keyed("activation")[0]
    sizes = [int(n) for n in reader.keyed("layers")]
    scales = {key: np.array([float(v) for v in reader.keyed(key)]) for key in ("x_min", "x_max", "y_min", "y_max")}
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        weights.append(np.vstack([reader.floats(n_out) for _ in range(n_in)]))
        biases.append(reader.floats(n_out))
    return MlpNetwork(weights=weights, biases=biases, activation=activation, **scales)


def load_surrogate(path: str) -> MooringSurrogate:
    """Read a surrogate written by :func:`save_surrogate`.

    Raises:
        SurrogateFormatError: unknown version or malformed content.
    """
    if not os.path.exists(path):
        raise SurrogateFormatError(f"Surrogate file not found: {path}", details={"path": path})
    reader = _Reader(path)
    try:
        header = reader.next()
        if header != FORMAT_HEADER:
            raise SurrogateFormatError(
                "Unknown surrogate format", details={"path": path, "header": header, "expected": FORMAT_HEADER}
            )
        length, weight, stiffness, max_strain = (float(v) for v in reader.keyed("line"))
        l_lo, l_hi, h_lo, h_hi = (float(v) for v in reader.keyed("domain"))
        count = int(reader.keyed("boundary")[0])
        curve = np.vstack([reader.floats(2) for _ in range(count)])
        report = {}
        for regime in REGIMES:
            parts = reader.keyed("error")
            report[parts[0]] = {"F_H": float(parts[1]), "F_V": float(parts[2])}
        networks = {regime: _read_network(reader, regime) for regime in REGIMES}
        reader.keyed("end")
    except (ValueError, IndexError) as e:
        raise SurrogateFormatError(f"Malformed surrogate file: {e}", details={"path": path}) from e

    return MooringSurrogate(
        suspended=networks[SUSPENDED],
        seabed=networks[SEABED],
        domain=((l_lo, l_hi), (h_lo, h_hi)),
        boundary_h=curve[:, 0],
        boundary_l=curve[:, 1],
        line=LineProperties(length=length, weight=weight, stiffness=stiffness, max_strain=max_strain),
        report=report,
    )
