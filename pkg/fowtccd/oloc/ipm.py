"""Primal-dual interior point method with a filter line search for sparse NLPs.

Problems have the form::

    min f(x)  s.t.  c_L <= c(x) <= c_U,  x_L <= x <= x_U

Rows with c_L == c_U are equalities; the remaining rows get slack variables so that all
inequalities become simple bounds handled by the log barrier. Newton steps solve the
symmetric KKT system with SuperLU.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from fowtccd.errors import FowtCcdError
from fowtccd.mixins.logger import LoggerMixin

OPTIMAL = "optimal"
MAX_ITERATIONS = "max_iterations"
RESTORATION_FAILED = "restoration_failed"
STALLED = "stalled"  # feasible, but no step the line search accepts

EPS = np.finfo(float).eps


class NlpProblem(Protocol):
    n: int
    m: int
    x_lower: np.ndarray
    x_upper: np.ndarray
    c_lower: np.ndarray
    c_upper: np.ndarray

    def objective(self, x: np.ndarray) -> float: ...

    def gradient(self, x: np.ndarray) -> np.ndarray: ...

    def constraints(self, x: np.ndarray) -> np.ndarray: ...

    def jacobian(self, x: np.ndarray) -> sp.spmatrix: ...

    def hessian(self, x: np.ndarray, obj_factor: float, y: np.ndarray) -> sp.spmatrix: ...


@dataclass
class IpmResult:
    x: np.ndarray
    y: np.ndarray  # constraint multipliers; positive where an upper bound is active
    z_lower: np.ndarray
    z_upper: np.ndarray
    objective: float
    status: str
    iterations: int
    constraint_violation: float
    dual_infeasibility: float
    history: List[Dict[str, float]] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


def _push_inside(x, lo, hi, kappa1=1e-2, kappa2=1e-2):
    x = np.array(x, dtype=float)
    has_lo, has_hi = np.isfinite(lo), np.isfinite(hi)
    both = has_lo & has_hi
    width = np.where(both, hi - lo, np.inf)
    p_lo = np.minimum(kappa1 * np.maximum(1.0, np.abs(np.where(has_lo, lo, 0.0))), kappa2 * width)
    p_hi = np.minimum(kappa1 * np.maximum(1.0, np.abs(np.where(has_hi, hi, 0.0))), kappa2 * width)
    x = np.where(has_lo, np.maximum(x, lo + p_lo), x)
    x = np.where(has_hi, np.minimum(x, hi - p_hi), x)
    return x


def _fraction_to_boundary(value, step, tau):
    """Largest alpha in (0, 1] keeping value + alpha * step >= (1 - tau) * value (value > 0)."""
    negative = step < 0
    if not np.any(negative):
        return 1.0
    return float(min(1.0, np.min(-tau * value[negative] / step[negative])))


class InteriorPointSolver(LoggerMixin):
    """IPOPT-style barrier method.

    Args:
        tol: scaled KKT error for convergence.
        constr_viol_tol: absolute constraint violation accepted at convergence.
        max_iter: iteration budget; on exhaustion the best feasible iterate is returned.
        mu_init: initial barrier parameter.
    """

    kappa_eps = 10.0
    kappa_mu = 0.2
    theta_mu = 1.5
    tau_min = 0.99
    gamma_theta = 1e-5
    gamma_phi = 1e-5
    eta_phi = 1e-4
    s_theta = 1.1
    s_phi = 2.3
    delta = 1.0
    alpha_min = 1e-9
    kappa_sigma = 1e10
    s_max = 100.0

    def __init__(
        self,
        tol: float = 1e-6,
        constr_viol_tol: float = 1e-6,
        max_iter: int = 500,
        mu_init: float = 0.1,
        max_restoration: int = 50,
        log_file: str = "oloc.log",
    ):
        super().__init__(log_file)
        self.tol = tol
        self.constr_viol_tol = constr_viol_tol
        self.max_iter = max_iter
        self.mu_init = mu_init
        self.max_restoration = max_restoration

    def solve(self, nlp: NlpProblem, x0) -> IpmResult:
        return _IpmRun(self, nlp).run(np.asarray(x0, dtype=float))


class _IpmRun:
    """State of one solve; keeps the solver object itself stateless."""

    def __init__(self, solver: InteriorPointSolver, nlp: NlpProblem):
        self.solver = solver
        self.nlp = nlp
        self.n, self.m = nlp.n, nlp.m
        self.eq = nlp.c_lower == nlp.c_upper
        self.ineq = np.flatnonzero(~self.eq)
        self.n_s = self.ineq.size
        self.w_lower = np.concatenate([nlp.x_lower, nlp.c_lower[self.ineq]])
        self.w_upper = np.concatenate([nlp.x_upper, nlp.c_upper[self.ineq]])
        self.has_l = np.isfinite(self.w_lower)
        self.has_u = np.isfinite(self.w_upper)
        # slack coupling block: row ineq[j] gets -1 in slack column j
        self.S = sp.csr_matrix(
            (-np.ones(self.n_s), (self.ineq, np.arange(self.n_s))), shape=(self.m, self.n_s)
        )
        self.history: List[Dict[str, float]] = []
        self.filter: List[tuple] = []

    # --- evaluations -------------------------------------------------------------

    def split(self, w):
        return w[: self.n], w[self.n :]

    def residual(self, w):
        x, s = self.split(w)
        c = self.nlp.constraints(x)
        C = c - self.nlp.c_lower
        C[self.ineq] = c[self.ineq] - s
        return C

    def jacobian(self, w):
        x, _ = self.split(w)
        return sp.hstack([sp.csr_matrix(self.nlp.jacobian(x)), self.S], format="csr")

    def gradient(self, w):
        x, _ = self.split(w)
        return np.concatenate([self.nlp.gradient(x), np.zeros(self.n_s)])

    def gaps(self, w):
        lower = np.where(self.has_l, w - np.where(self.has_l, self.w_lower, 0.0), 1.0)
        upper = np.where(self.has_u, np.where(self.has_u, self.w_upper, 0.0) - w, 1.0)
        return lower, upper

    def barrier(self, w, mu):
        x, _ = self.split(w)
        lower, upper = self.gaps(w)
        if np.any(lower[self.has_l] <= 0) or np.any(upper[self.has_u] <= 0):
            return np.inf
        return self.nlp.objective(x) - mu * (np.sum(np.log(lower[self.has_l])) + np.sum(np.log(upper[self.has_u])))

    def measures(self, w, mu):
        """Constraint violation and barrier objective; trial points the model rejects count as infinite."""
        try:
            return float(np.sum(np.abs(self.residual(w)))), self.barrier(w, mu)
        except (FowtCcdError, ArithmeticError):
            return np.inf, np.inf

    def barrier_gradient(self, w, mu):
        lower, upper = self.gaps(w)
        g = self.gradient(w)
        g[self.has_l] -= mu / lower[self.has_l]
        g[self.has_u] += mu / upper[self.has_u]
        return g

    # --- filter ------------------------------------------------------------------

    def acceptable(self, theta, phi, slack=0.0):
        return all(theta < t or phi < p + slack for t, p in self.filter)

    # --- main loop ---------------------------------------------------------------

    def initial_point(self, x0):
        nlp = self.nlp
        x = _push_inside(x0, nlp.x_lower, nlp.x_upper)
        c = nlp.constraints(x)
        s = _push_inside(c[self.ineq], nlp.c_lower[self.ineq], nlp.c_upper[self.ineq])
        w = np.concatenate([x, s])
        z_l = np.where(self.has_l, 1.0, 0.0)
        z_u = np.where(self.has_u, 1.0, 0.0)
        return w, np.zeros(self.m), z_l, z_u

    def errors(self, w, y, z_l, z_u, mu, A=None, g=None):
        A = self.jacobian(w) if A is None else A
        g = self.gradient(w) if g is None else g
        dual = g + A.T @ y - z_l + z_u
        C = self.residual(w)
        lower, upper = self.gaps(w)
        comp = np.concatenate([(lower * z_l)[self.has_l] - mu, (upper * z_u)[self.has_u] - mu])
        z_norm = np.sum(np.abs(z_l)) + np.sum(np.abs(z_u))
        count = max(1, self.m + w.size)
        s_d = max(self.solver.s_max, (np.sum(np.abs(y)) + z_norm) / count) / self.solver.s_max
        s_c = max(self.solver.s_max, z_norm / max(1, w.size)) / self.solver.s_max
        dual_inf = float(np.max(np.abs(dual))) if dual.size else 0.0
        viol = float(np.max(np.abs(C))) if C.size else 0.0
        comp_err = float(np.max(np.abs(comp))) if comp.size else 0.0
        return max(dual_inf / s_d, viol, comp_err / s_c), dual_inf, viol

    def kkt_solve(self, H, A, sigma, rhs_w, rhs_c, refinements=3):
        """Newton step (dw, dy); the constraint block is regularised only when the factorisation fails.

        Iterative refinement against the system without that regularisation removes the
        error it would otherwise leave in the constraint rows.
        """
        size = H.shape[0]
        rhs = np.concatenate([rhs_w, rhs_c])
        delta_w, delta_c = 1e-9, 0.0
        for _ in range(12):
            top = H + sp.diags(sigma + delta_w)
            K = sp.bmat([[top, A.T], [A, -delta_c * sp.identity(self.m)]], format="csc")
            try:
                lu = splu(K)
                solution = lu.solve(rhs)
            except RuntimeError:
                solution = None
            if solution is not None and np.all(np.isfinite(solution)):
                target = K if delta_c == 0.0 else sp.bmat([[top, A.T], [A, None]], format="csc")
                for _ in range(refinements):
                    correction = lu.solve(rhs - target @ solution)
                    if not np.all(np.isfinite(correction)):
                        break
                    solution = solution + correction
                return solution[:size], solution[size:]
            delta_w = max(1e-4, 8 * delta_w)
            delta_c = 1e-8
        raise np.linalg.LinAlgError("KKT system is singular")

    def lagrangian_hessian(self, w, y):
        x, _ = self.split(w)
        H = sp.csr_matrix(self.nlp.hessian(x, 1.0, y))
        if self.n_s:
            H = sp.block_diag([H, sp.csr_matrix((self.n_s, self.n_s))], format="csr")
        return H

    def restore(self, w, y, z_l, z_u, mu):
        """Gauss-Newton steps toward feasibility, staying strictly inside the bounds."""
        C = self.residual(w)
        if np.max(np.abs(C)) <= self.solver.constr_viol_tol:
            # nothing to restore; the line search failed at a feasible point
            return w, False
        theta_start = float(np.sum(np.abs(C)))
        for _ in range(self.solver.max_restoration):
            C = self.residual(w)
            theta = float(np.sum(np.abs(C)))
            phi = self.barrier(w, mu)
            if theta <= 0.9 * theta_start and self.acceptable(theta, phi):
                return w, True
            if theta < theta_start and np.max(np.abs(C)) <= self.solver.constr_viol_tol:
                return w, True
            A = self.jacobian(w)
            lower, upper = self.gaps(w)
            D = np.full(w.size, 1e-6)
            D[self.has_l] += z_l[self.has_l] / lower[self.has_l]
            D[self.has_u] += z_u[self.has_u] / upper[self.has_u]
            try:
                dw, _ = self.kkt_solve(sp.csr_matrix((w.size, w.size)), A, D, np.zeros(w.size), -C)
            except np.linalg.LinAlgError:
                return w, False
            tau = max(self.solver.tau_min, 1 - mu)
            alpha = min(
                _fraction_to_boundary(lower[self.has_l], dw[self.has_l], tau),
                _fraction_to_boundary(upper[self.has_u], -dw[self.has_u], tau),
            )
            while alpha > self.solver.alpha_min:
                trial = w + alpha * dw
                if self.measures(trial, mu)[0] < (1 - 1e-4 * alpha) * theta:
                    break
                alpha *= 0.5
            else:
                return w, False
            w = trial
        return w, False

    def run(self, x0) -> IpmResult:
        solver = self.solver
        nlp = self.nlp
        w, y, z_l, z_u = self.initial_point(x0)
        mu = solver.mu_init
        tau = max(solver.tau_min, 1 - mu)
        theta0 = float(np.sum(np.abs(self.residual(w))))
        theta_max = 1e4 * max(1.0, theta0)
        theta_min = 1e-4 * max(1.0, theta0)
        self.filter = [(theta_max, -np.inf)]

        best = None
        status = MAX_ITERATIONS
        dual_inf, viol = np.inf, np.inf
        iteration = 0
        tiny_steps = 0
        for iteration in range(solver.max_iter + 1):
            A = self.jacobian(w)
            g = self.gradient(w)
            error0, dual_inf, viol = self.errors(w, y, z_l, z_u, 0.0, A, g)
            f_val = nlp.objective(self.split(w)[0])
            if viol <= solver.constr_viol_tol and (best is None or f_val < best[0]):
                best = (f_val, w.copy(), y.copy(), z_l.copy(), z_u.copy())
            if error0 <= solver.tol and viol <= solver.constr_viol_tol:
                status = OPTIMAL
                break
            if iteration == solver.max_iter:
                break

            while mu > solver.tol / 10:
                error_mu, _, _ = self.errors(w, y, z_l, z_u, mu, A, g)
                if error_mu > solver.kappa_eps * mu:
                    break
                mu = max(solver.tol / 10, min(solver.kappa_mu * mu, mu**solver.theta_mu))
                tau = max(solver.tau_min, 1 - mu)
                self.filter = [(theta_max, -np.inf)]

            lower, upper = self.gaps(w)
            sigma = np.zeros(w.size)
            sigma[self.has_l] += z_l[self.has_l] / lower[self.has_l]
            sigma[self.has_u] += z_u[self.has_u] / upper[self.has_u]
            H = self.lagrangian_hessian(w, y)
            grad_phi = self.barrier_gradient(w, mu)
            C = self.residual(w)
            try:
                dw, dy = self.kkt_solve(H, A, sigma, -(grad_phi + A.T @ y), -C)
            except np.linalg.LinAlgError:
                status = RESTORATION_FAILED
                break

            dz_l = np.zeros(w.size)
            dz_u = np.zeros(w.size)
            hl, hu = self.has_l, self.has_u
            dz_l[hl] = mu / lower[hl] - z_l[hl] - z_l[hl] / lower[hl] * dw[hl]
            dz_u[hu] = mu / upper[hu] - z_u[hu] + z_u[hu] / upper[hu] * dw[hu]

            alpha_max = min(
                _fraction_to_boundary(lower[self.has_l], dw[self.has_l], tau),
                _fraction_to_boundary(upper[self.has_u], -dw[self.has_u], tau),
            )
            alpha_z = min(
                _fraction_to_boundary(z_l[self.has_l], dz_l[self.has_l], tau),
                _fraction_to_boundary(z_u[self.has_u], dz_u[self.has_u], tau),
            )

            theta = float(np.sum(np.abs(C)))
            phi = self.barrier(w, mu)
            slope = float(grad_phi @ dw)
            # barrier changes below this are round-off
            slack = 10 * EPS * max(1.0, abs(phi))
            alpha = alpha_max
            accepted = False
            tiny = float(np.max(np.abs(dw) / (1.0 + np.abs(w)))) < 10 * EPS
            if tiny:
                trial = w + alpha * dw
                accepted = True
                tiny_steps += 1
            else:
                tiny_steps = 0
            while not accepted and alpha >= solver.alpha_min:
                trial = w + alpha * dw
                theta_t, phi_t = self.measures(trial, mu)
                if np.isfinite(phi_t) and theta_t <= theta_max and self.acceptable(theta_t, phi_t, slack):
                    switching = (
                        theta <= theta_min
                        and slope < 0
                        and alpha * (-slope) ** solver.s_phi > solver.delta * theta**solver.s_theta
                    )
                    if switching:
                        if phi_t <= phi + solver.eta_phi * alpha * slope + slack:
                            accepted = True
                            break
                    elif theta_t <= (1 - solver.gamma_theta) * theta or phi_t <= phi - solver.gamma_phi * theta + slack:
                        self.filter.append(((1 - solver.gamma_theta) * theta, phi - solver.gamma_phi * theta))
                        accepted = True
                        break
                alpha *= 0.5

            if tiny_steps >= 2 and mu <= solver.tol / 10 and viol <= solver.constr_viol_tol:
                status = STALLED
                break

            if accepted:
                w = trial
                y = y + alpha * dy
                z_l = z_l + alpha_z * dz_l
                z_u = z_u + alpha_z * dz_u
            else:
                self.filter.append(((1 - solver.gamma_theta) * theta, phi - solver.gamma_phi * theta))
                solver.log_debug(f"iter {iteration}: line search failed, entering restoration (theta={theta:.3e})")
                w, restored = self.restore(w, y, z_l, z_u, mu)
                if not restored:
                    if viol > solver.constr_viol_tol:
                        status = RESTORATION_FAILED
                        break
                    if mu <= solver.tol / 10:
                        status = STALLED
                        break
                    # feasible: move on to the next barrier problem with a fresh filter
                    mu = max(solver.tol / 10, min(solver.kappa_mu * mu, mu**solver.theta_mu))
                    tau = max(solver.tau_min, 1 - mu)
                    self.filter = [(theta_max, -np.inf)]
                lower, upper = self.gaps(w)
                z_l = np.where(self.has_l, mu / lower, 0.0)
                z_u = np.where(self.has_u, mu / upper, 0.0)
                alpha = 0.0

            # keep the bound multipliers close to the central path
            lower, upper = self.gaps(w)
            k = solver.kappa_sigma
            z_l = np.where(self.has_l, np.clip(z_l, mu / (k * lower), k * mu / lower), 0.0)
            z_u = np.where(self.has_u, np.clip(z_u, mu / (k * upper), k * mu / upper), 0.0)

            record = {
                "iteration": iteration,
                "objective": float(nlp.objective(self.split(w)[0])),
                "mu": mu,
                "constraint_violation": viol,
                "dual_infeasibility": dual_inf,
                "alpha": alpha,
                "filter": len(self.filter),
            }
            self.history.append(record)
            solver.log_debug(
                f"iter {iteration}: f={record['objective']:.8e} mu={mu:.2e} inf_pr={viol:.2e} "
                f"inf_du={dual_inf:.2e} alpha={alpha:.2e} filter={len(self.filter)}"
            )

        if status in (MAX_ITERATIONS, STALLED) and best is not None:
            _, w, y, z_l, z_u = best
            _, dual_inf, viol = self.errors(w, y, z_l, z_u, 0.0)
        x, _ = self.split(w)
        objective = float(nlp.objective(x))
        log = solver.log_info if status == OPTIMAL else solver.log_warning
        log(f"Interior point finished: {status} after {iteration} iterations, f={objective:.8e}, inf_pr={viol:.2e}")
        return IpmResult(
            x=x,
            y=y,
            z_lower=z_l[: self.n],
            z_upper=z_u[: self.n],
            objective=objective,
            status=status,
            iterations=iteration,
            constraint_violation=viol,
            dual_infeasibility=dual_inf,
            history=self.history,
        )
