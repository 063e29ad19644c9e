"""Separated Hermite-Simpson transcription of an optimal control problem into a sparse NLP.

Decision variables are scaled states and controls at the 2N+1 mesh points (segment
nodes at even indices, midpoints at odd ones), stored point-major. Derivatives of the
batched point function come from autograd vector-Jacobian products: every output of a
point depends only on that point's variables, so one VJP per output column yields the
per-point Jacobian blocks of the whole mesh at once.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import autograd.numpy as anp
import numpy as np
import scipy.sparse as sp
from autograd import grad, make_vjp

from fowtccd.errors import ArgumentError


@dataclass
class CollocationModel:
    """Dynamics, path outputs and running reward of one optimal control problem.

    ``point(X, U, t)`` maps states (n, ns), controls (n, nc) and times (n,) to an
    autograd array (n, ns + n_path + 1) holding the state derivative, the path outputs
    and the integrand that is maximised.
    """

    point: Callable
    state_scale: np.ndarray
    control_scale: np.ndarray
    state_lower: np.ndarray
    state_upper: np.ndarray
    control_lower: np.ndarray
    control_upper: np.ndarray
    path_lower: np.ndarray = None
    path_upper: np.ndarray = None
    path_scale: np.ndarray = None
    initial_state: Optional[np.ndarray] = None
    final_state: Optional[np.ndarray] = None
    final_mask: Optional[np.ndarray] = None
    objective_scale: float = 1.0

    def __post_init__(self):
        as_array = lambda v: np.asarray(v, dtype=float)
        self.state_scale = as_array(self.state_scale)
        self.control_scale = as_array(self.control_scale)
        self.state_lower, self.state_upper = as_array(self.state_lower), as_array(self.state_upper)
        self.control_lower, self.control_upper = as_array(self.control_lower), as_array(self.control_upper)
        self.path_lower = np.zeros(0) if self.path_lower is None else as_array(self.path_lower)
        self.path_upper = np.zeros(0) if self.path_upper is None else as_array(self.path_upper)
        self.path_scale = np.ones(self.path_lower.size) if self.path_scale is None else as_array(self.path_scale)
        if self.final_state is not None and self.final_mask is None:
            self.final_mask = np.ones(self.n_states, dtype=bool)
        if np.any(self.state_lower > self.state_upper) or np.any(self.control_lower > self.control_upper):
            raise ArgumentError("Variable bounds are not ordered")
        if np.any(self.path_lower > self.path_upper):
            raise ArgumentError("Path constraint bounds are not ordered")

    @property
    def n_states(self) -> int:
        return self.state_scale.size

    @property
    def n_controls(self) -> int:
        return self.control_scale.size

    @property
    def n_path(self) -> int:
        return self.path_lower.size


class HermiteSimpson:
    """Sparse NLP view of a CollocationModel on a uniform mesh.

    Implements the problem protocol of InteriorPointSolver. Constraint rows are, in
    order: initial state, per segment the Simpson then the Hermite defect, final
    state, and the path outputs at every mesh point.
    """

    def __init__(self, model: CollocationModel, t_i: float, t_f: float, segments: int, convexify: bool = True):
        if segments < 1:
            raise ArgumentError("The collocation mesh needs at least one segment", details={"segments": segments})
        if not t_f > t_i:
            raise ArgumentError("Empty time horizon", details={"t_i": t_i, "t_f": t_f})
        self.model = model
        self.t_i, self.t_f = float(t_i), float(t_f)
        self.segments = int(segments)
        self.convexify = convexify
        self.h = (self.t_f - self.t_i) / self.segments
        self.points = 2 * self.segments + 1
        self.time = self.t_i + 0.5 * self.h * np.arange(self.points)

        ns, nc, npath = model.n_states, model.n_controls, model.n_path
        self.nv = ns + nc
        self.n = self.points * self.nv
        self.n_initial = ns if model.initial_state is not None else 0
        self.final_index = np.flatnonzero(model.final_mask) if model.final_state is not None else np.zeros(0, dtype=int)
        self.n_defect = 2 * ns * self.segments
        self.n_path_rows = npath * self.points
        self.m = self.n_initial + self.n_defect + self.final_index.size + self.n_path_rows

        self.scale = np.concatenate([model.state_scale, model.control_scale])
        lower = np.concatenate([model.state_lower, model.control_lower]) / self.scale
        upper = np.concatenate([model.state_upper, model.control_upper]) / self.scale
        self.x_lower = np.tile(lower, self.points)
        self.x_upper = np.tile(upper, self.points)
        if model.initial_state is not None:
            # the initial state is pinned by equality rows; bounds there would fight them
            self.x_lower[:ns] = -np.inf
            self.x_upper[:ns] = np.inf

        c_lower = np.zeros(self.m)
        c_upper = np.zeros(self.m)
        path_start = self.m - self.n_path_rows
        c_lower[path_start:] = np.tile(model.path_lower / model.path_scale, self.points)
        c_upper[path_start:] = np.tile(model.path_upper / model.path_scale, self.points)
        self.c_lower, self.c_upper = c_lower, c_upper

        quadrature = np.zeros(self.points)
        quadrature[0:-1:2] += self.h / 6
        quadrature[1::2] += 4 * self.h / 6
        quadrature[2::2] += self.h / 6
        self.quadrature = quadrature

        self._linear = self._linear_jacobian()
        self._cache_key = None
        self._cache: Dict[str, np.ndarray] = {}

    # --- packing -------------------------------------------------------------------

    def pack(self, X, U) -> np.ndarray:
        V = np.hstack([np.asarray(X, dtype=float), np.asarray(U, dtype=float)]) / self.scale
        return V.reshape(-1)

    def unpack(self, z):
        V = np.asarray(z, dtype=float).reshape(self.points, self.nv) * self.scale
        ns = self.model.n_states
        return V[:, :ns], V[:, ns:]

    def _physical(self, V):
        ns = self.model.n_states
        return V[:, :ns] * self.model.state_scale, V[:, ns:] * self.model.control_scale

    def _outputs(self, V):
        X, U = self._physical(V)
        return self.model.point(X, U, self.time)

    # --- evaluation -----------------------------------------------------------------

    def _evaluate(self, z):
        key = np.asarray(z, dtype=float).tobytes()
        if key == self._cache_key:
            return self._cache
        V = np.asarray(z, dtype=float).reshape(self.points, self.nv)
        vjp, F = make_vjp(self._outputs)(V)
        F = np.asarray(F, dtype=float)
        blocks = np.empty((self.points, F.shape[1], self.nv))
        for j in range(F.shape[1]):
            seed = np.zeros_like(F)
            seed[:, j] = 1.0
            blocks[:, j, :] = vjp(seed)
        self._cache_key = key
        self._cache = {"V": V, "F": F, "J": blocks}
        return self._cache

    def objective(self, z) -> float:
        F = self._evaluate(z)["F"]
        return float(-np.dot(self.quadrature, F[:, -1]) / self.model.objective_scale)

    def gradient(self, z) -> np.ndarray:
        J = self._evaluate(z)["J"]
        return (-(self.quadrature / self.model.objective_scale)[:, None] * J[:, -1, :]).reshape(-1)

    def constraints(self, z) -> np.ndarray:
        ev = self._evaluate(z)
        V, F = ev["V"], ev["F"]
        model = self.model
        ns = model.n_states
        sx = model.state_scale
        X = V[:, :ns] * sx
        f = F[:, :ns]
        parts = []
        if self.n_initial:
            parts.append((X[0] - model.initial_state) / sx)
        x0, x1, x2 = X[0:-1:2], X[1::2], X[2::2]
        f0, f1, f2 = f[0:-1:2], f[1::2], f[2::2]
        h = self.h
        simpson = (x2 - x0 - h / 6 * (f0 + 4 * f1 + f2)) / sx
        hermite = (x1 - 0.5 * (x0 + x2) - h / 8 * (f0 - f2)) / sx
        parts.append(np.stack([simpson, hermite], axis=1).reshape(-1))
        if self.final_index.size:
            k = self.final_index
            parts.append((X[-1, k] - model.final_state[k]) / sx[k])
        if model.n_path:
            parts.append((F[:, ns : ns + model.n_path] / model.path_scale).reshape(-1))
        return np.concatenate(parts)

    def _linear_jacobian(self) -> sp.csr_matrix:
        """Constant part of the constraint Jacobian (state terms of the defects and boundary rows)."""
        ns, nv = self.model.n_states, self.nv
        rows, cols, vals = [], [], []
        states = np.arange(ns)
        if self.n_initial:
            rows.append(states)
            cols.append(states)
            vals.append(np.ones(ns))
        for k in range(self.segments):
            base = self.n_initial + 2 * ns * k
            p0, p1, p2 = 2 * k, 2 * k + 1, 2 * k + 2
            for point, weight in ((p2, 1.0), (p0, -1.0)):
                rows.append(base + states)
                cols.append(point * nv + states)
                vals.append(np.full(ns, weight))
            for point, weight in ((p1, 1.0), (p0, -0.5), (p2, -0.5)):
                rows.append(base + ns + states)
                cols.append(point * nv + states)
                vals.append(np.full(ns, weight))
        if self.final_index.size:
            start = self.n_initial + self.n_defect
            rows.append(start + np.arange(self.final_index.size))
            cols.append((self.points - 1) * nv + self.final_index)
            vals.append(np.ones(self.final_index.size))
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(self.m, self.n)
        )

    def _dynamic_entries(self, J):
        """COO triplets of the defect and path rows that depend on the point function."""
        model = self.model
        ns, nv, h = model.n_states, self.nv, self.h
        sx = model.state_scale
        K = self.segments
        seg = np.arange(K)
        states = np.arange(ns)
        local = np.arange(nv)

        rows, cols, vals = [], [], []

        def add(row_offset, point, coefficient):
            # row_offset: (K,), point: (K,), coefficient scalar; entries (K, ns, nv)
            r = (row_offset[:, None, None] + states[None, :, None]) * np.ones((1, 1, nv), dtype=int)
            c = (point[:, None, None] * nv + local[None, None, :]) * np.ones((1, ns, 1), dtype=int)
            v = coefficient * J[point][:, :ns, :] / sx[None, :, None]
            rows.append(r.reshape(-1))
            cols.append(c.reshape(-1))
            vals.append(v.reshape(-1))

        simpson_rows = self.n_initial + 2 * ns * seg
        hermite_rows = simpson_rows + ns
        add(simpson_rows, 2 * seg, -h / 6)
        add(simpson_rows, 2 * seg + 1, -4 * h / 6)
        add(simpson_rows, 2 * seg + 2, -h / 6)
        add(hermite_rows, 2 * seg, -h / 8)
        add(hermite_rows, 2 * seg + 2, h / 8)

        if model.n_path:
            npath = model.n_path
            start = self.m - self.n_path_rows
            p = np.arange(self.points)
            r = start + p[:, None, None] * npath + np.arange(npath)[None, :, None] + np.zeros((1, 1, nv), dtype=int)
            c = p[:, None, None] * nv + local[None, None, :] + np.zeros((1, npath, 1), dtype=int)
            v = J[:, ns : ns + npath, :] / model.path_scale[None, :, None]
            rows.append(r.reshape(-1))
            cols.append(c.reshape(-1))
            vals.append(v.reshape(-1))
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)

    def jacobian(self, z) -> sp.csr_matrix:
        rows, cols, vals = self._dynamic_entries(self._evaluate(z)["J"])
        dynamic = sp.coo_matrix((vals, (rows, cols)), shape=(self.m, self.n)).tocsr()
        return dynamic + self._linear

    def jacobian_structure(self) -> sp.csr_matrix:
        """Boolean sparsity pattern of the constraint Jacobian."""
        ones = np.ones((self.points, self.model.n_states + self.model.n_path + 1, self.nv))
        rows, cols, _ = self._dynamic_entries(ones)
        pattern = sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(self.m, self.n)).tocsr()
        pattern = pattern + abs(self._linear)
        return pattern.astype(bool)

    def _output_weights(self, obj_factor, y):
        """Per-point multipliers of the point-function outputs in the Lagrangian."""
        model = self.model
        ns, npath = model.n_states, model.n_path
        sx, h = model.state_scale, self.h
        W = np.zeros((self.points, ns + npath + 1))
        defects = y[self.n_initial : self.n_initial + self.n_defect].reshape(self.segments, 2, ns)
        y_s, y_h = defects[:, 0, :] / sx, defects[:, 1, :] / sx
        W[0:-1:2, :ns] += -h / 6 * y_s - h / 8 * y_h
        W[1::2, :ns] += -4 * h / 6 * y_s
        W[2::2, :ns] += -h / 6 * y_s + h / 8 * y_h
        if npath:
            path = y[self.m - self.n_path_rows :].reshape(self.points, npath)
            W[:, ns : ns + npath] = path / model.path_scale
        W[:, -1] = -obj_factor * self.quadrature / model.objective_scale
        return W

    def hessian(self, z, obj_factor: float, y) -> sp.csr_matrix:
        """Block-diagonal Hessian of the Lagrangian, one (nv, nv) block per mesh point."""
        V = np.asarray(z, dtype=float).reshape(self.points, self.nv)
        W = self._output_weights(obj_factor, np.asarray(y, dtype=float))
        weighted_grad = grad(lambda V_: anp.sum(W * self._outputs(V_)))
        vjp, _ = make_vjp(weighted_grad)(V)
        blocks = np.empty((self.points, self.nv, self.nv))
        for a in range(self.nv):
            seed = np.zeros_like(V)
            seed[:, a] = 1.0
            blocks[:, a, :] = vjp(seed)
        blocks = 0.5 * (blocks + np.transpose(blocks, (0, 2, 1)))
        if self.convexify:
            eigenvalues, vectors = np.linalg.eigh(blocks)
            eigenvalues = np.maximum(eigenvalues, 0.0)
            blocks = np.einsum("pij,pj,pkj->pik", vectors, eigenvalues, vectors)
        return sp.block_diag(list(blocks), format="csr")

    # --- results --------------------------------------------------------------------

    def multipliers(self, y) -> Dict[str, np.ndarray]:
        """Split constraint multipliers into defect (segments, 2, ns) and path (points, n_path) blocks."""
        model = self.model
        y = np.asarray(y, dtype=float)
        out = {
            "defects": y[self.n_initial : self.n_initial + self.n_defect].reshape(self.segments, 2, model.n_states),
        }
        if model.n_path:
            out["path"] = y[self.m - self.n_path_rows :].reshape(self.points, model.n_path)
        return out

    def initial_guess(self, X, U) -> np.ndarray:
        z = self.pack(X, U)
        return np.clip(z, self.x_lower, self.x_upper)
