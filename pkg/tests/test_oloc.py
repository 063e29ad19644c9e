import autograd.numpy as anp
import numpy as np
import pytest
import scipy.sparse as sp

from fowtccd.errors import ArgumentError
from fowtccd.model.dynamics import evaluate_trajectory, point_outputs
from fowtccd.model.types import IX, N_STATES
from fowtccd.oloc.ipm import OPTIMAL, InteriorPointSolver, _IpmRun
from fowtccd.oloc.problem import PATH_NAMES, build_problem, optimal_tsr, transcribe, trim_guess, trim_state
from fowtccd.oloc.solution import (
    ControlSchedule,
    check_feasibility,
    forward_check,
    inner_objective,
    solve_nlp,
    solve_oloc,
)
from fowtccd.oloc.transcription import CollocationModel, HermiteSimpson
from fowtccd.settings import OlocConfig


def double_integrator(path_upper=None):
    """Rest to rest over unit distance in unit time; the effort-optimal cost is 12."""

    def point(X, U, t):
        u = U[:, 0]
        columns = [X[:, 1], u]
        if path_upper is not None:
            columns.append(u)
        columns.append(-(u**2))
        return anp.stack(columns, axis=-1)

    return CollocationModel(
        point=point,
        state_scale=[1.0, 1.0],
        control_scale=[1.0],
        state_lower=[-10.0, -10.0],
        state_upper=[10.0, 10.0],
        control_lower=[-50.0],
        control_upper=[50.0],
        path_lower=None if path_upper is None else [-np.inf],
        path_upper=None if path_upper is None else [path_upper],
        initial_state=np.array([0.0, 0.0]),
        final_state=np.array([1.0, 0.0]),
    )


def pendulum():
    """Nonlinear toy with a path output, for derivative checks."""

    def point(X, U, t):
        theta, omega, u = X[:, 0], X[:, 1], U[:, 0]
        return anp.stack(
            [omega, -anp.sin(theta) + u * anp.cos(theta), theta * u + omega**2, -(u**2) - theta**2 * omega],
            axis=-1,
        )

    return CollocationModel(
        point=point,
        state_scale=[0.5, 2.0],
        control_scale=[3.0],
        state_lower=[-3.0, -5.0],
        state_upper=[3.0, 5.0],
        control_lower=[-4.0],
        control_upper=[4.0],
        path_lower=[-2.0],
        path_upper=[2.0],
        path_scale=[2.0],
        initial_state=np.array([0.3, 0.0]),
        final_state=np.array([0.0, 0.0]),
        final_mask=np.array([True, False]),
    )


class OneDimensional:
    """min (x - 2)^2 subject to x <= 1."""

    n, m = 1, 1
    x_lower = np.array([-np.inf])
    x_upper = np.array([np.inf])
    c_lower = np.array([-np.inf])
    c_upper = np.array([1.0])

    def objective(self, x):
        return float((x[0] - 2.0) ** 2)

    def gradient(self, x):
        return np.array([2.0 * (x[0] - 2.0)])

    def constraints(self, x):
        return np.array([x[0]])

    def jacobian(self, x):
        return sp.csr_matrix(np.array([[1.0]]))

    def hessian(self, x, obj_factor, y):
        return sp.csr_matrix(np.array([[2.0 * obj_factor]]))


class RedundantEquality:
    """min (x - 2)^2 + (y - 1)^2 subject to x + y = 1 stated twice; rank-deficient Jacobian."""

    n, m = 2, 2
    x_lower = np.array([-np.inf, -np.inf])
    x_upper = np.array([np.inf, np.inf])
    c_lower = np.array([1.0, 2.0])
    c_upper = np.array([1.0, 2.0])

    def objective(self, x):
        return float((x[0] - 2.0) ** 2 + (x[1] - 1.0) ** 2)

    def gradient(self, x):
        return np.array([2.0 * (x[0] - 2.0), 2.0 * (x[1] - 1.0)])

    def constraints(self, x):
        return np.array([x[0] + x[1], 2.0 * x[0] + 2.0 * x[1]])

    def jacobian(self, x):
        return sp.csr_matrix(np.array([[1.0, 1.0], [2.0, 2.0]]))

    def hessian(self, x, obj_factor, y):
        return sp.csr_matrix(2.0 * obj_factor * np.eye(2))


def _finite_difference(fn, z, step=1e-6):
    base = np.asarray(fn(z), dtype=float)
    out = np.empty(base.shape + (z.size,))
    for i in range(z.size):
        dz = np.zeros_like(z)
        dz[i] = step
        out[..., i] = (np.asarray(fn(z + dz)) - np.asarray(fn(z - dz))) / (2 * step)
    return out


class TestInteriorPoint:
    def test_effort_optimal_transfer(self):
        nlp = HermiteSimpson(double_integrator(), 0.0, 1.0, 10)
        result = InteriorPointSolver(tol=1e-9, constr_viol_tol=1e-9).solve(nlp, np.zeros(nlp.n))
        assert result.status == OPTIMAL
        assert result.objective == pytest.approx(12.0, rel=1e-6)
        X, U = nlp.unpack(result.x)
        np.testing.assert_allclose(U[:, 0], 6.0 - 12.0 * nlp.time, atol=1e-4)
        np.testing.assert_allclose(X[-1], [1.0, 0.0], atol=1e-8)

    def test_path_constraint_costs_effort(self):
        nlp = HermiteSimpson(double_integrator(path_upper=5.0), 0.0, 1.0, 10)
        result = InteriorPointSolver(tol=1e-8, constr_viol_tol=1e-8).solve(nlp, np.zeros(nlp.n))
        assert result.status == OPTIMAL
        assert result.objective > 12.0
        _, U = nlp.unpack(result.x)
        assert np.max(U) <= 5.0 + 1e-6
        path = nlp.multipliers(result.y)["path"]
        assert path[0, 0] > 0

    def test_active_upper_bound_multiplier(self):
        result = InteriorPointSolver(tol=1e-10, constr_viol_tol=1e-10).solve(OneDimensional(), np.array([0.0]))
        assert result.success
        assert result.x[0] == pytest.approx(1.0, abs=1e-7)
        assert result.y[0] == pytest.approx(2.0, rel=1e-6)
        assert result.objective == pytest.approx(1.0, rel=1e-6)

    @pytest.mark.parametrize("tol", [1e-8, 1e-9])
    def test_tight_tolerance_converges_without_stalling(self, tol):
        nlp = HermiteSimpson(double_integrator(), 0.0, 1.0, 10)
        result = InteriorPointSolver(tol=tol, constr_viol_tol=tol).solve(nlp, np.zeros(nlp.n))
        assert result.status == OPTIMAL
        assert result.iterations < 50
        assert all(record["alpha"] > 0 for record in result.history)
        assert result.objective == pytest.approx(12.0, rel=1e-6)

    def test_tight_tolerance_on_active_bound(self):
        solver = InteriorPointSolver(tol=1e-10, constr_viol_tol=1e-10, max_iter=100)
        result = solver.solve(OneDimensional(), np.array([0.0]))
        assert result.status == OPTIMAL
        assert all(record["alpha"] > 0 for record in result.history)

    def test_rank_deficient_constraints(self):
        result = InteriorPointSolver(tol=1e-8, constr_viol_tol=1e-8).solve(RedundantEquality(), np.zeros(2))
        assert result.status == OPTIMAL
        np.testing.assert_allclose(result.x, [1.0, 0.0], atol=1e-6)
        # multipliers are not unique, their combination is
        assert result.y[0] + 2.0 * result.y[1] == pytest.approx(2.0, rel=1e-5)

    def test_feasible_point_is_not_restored(self):
        run = _IpmRun(InteriorPointSolver(), OneDimensional())
        w, y, z_l, z_u = run.initial_point(np.array([0.0]))
        restored_w, restored = run.restore(w, y, z_l, z_u, 0.1)
        assert not restored
        np.testing.assert_array_equal(restored_w, w)


class TestTranscription:
    def test_sizes(self):
        model = pendulum()
        nlp = HermiteSimpson(model, 0.0, 2.0, 5)
        assert nlp.points == 11
        assert nlp.n == 11 * 3
        assert nlp.m == 2 + 2 * 2 * 5 + 1 + 11
        np.testing.assert_allclose(nlp.time, np.linspace(0.0, 2.0, 11))
        assert np.sum(nlp.quadrature) == pytest.approx(2.0)

    def test_pack_and_unpack(self):
        nlp = HermiteSimpson(pendulum(), 0.0, 2.0, 3)
        rng = np.random.default_rng(0)
        X, U = rng.normal(size=(nlp.points, 2)), rng.normal(size=(nlp.points, 1))
        X_back, U_back = nlp.unpack(nlp.pack(X, U))
        np.testing.assert_allclose(X_back, X)
        np.testing.assert_allclose(U_back, U)

    def test_derivatives_match_differences(self):
        nlp = HermiteSimpson(pendulum(), 0.0, 2.0, 4, convexify=False)
        rng = np.random.default_rng(1)
        z = rng.uniform(-0.5, 0.5, nlp.n)
        np.testing.assert_allclose(nlp.gradient(z), _finite_difference(nlp.objective, z), rtol=1e-6, atol=1e-8)
        jacobian = nlp.jacobian(z).toarray()
        np.testing.assert_allclose(jacobian, _finite_difference(nlp.constraints, z), rtol=1e-6, atol=1e-8)

        y = rng.normal(size=nlp.m)

        def lagrangian_gradient(v):
            return 0.7 * nlp.gradient(v) + nlp.jacobian(v).T @ y

        hessian = nlp.hessian(z, 0.7, y).toarray()
        np.testing.assert_allclose(hessian, _finite_difference(lagrangian_gradient, z, 1e-5), rtol=1e-5, atol=1e-6)

    def test_sparsity_pattern_covers_jacobian(self):
        nlp = HermiteSimpson(pendulum(), 0.0, 2.0, 4)
        z = np.random.default_rng(2).uniform(-0.5, 0.5, nlp.n)
        nonzero = nlp.jacobian(z).toarray() != 0
        pattern = nlp.jacobian_structure().toarray()
        assert np.all(pattern[nonzero])
        # defect rows only reach the three points of their segment
        assert pattern.sum() < 0.3 * pattern.size

    def test_convexified_hessian_is_positive_semidefinite(self):
        nlp = HermiteSimpson(pendulum(), 0.0, 2.0, 3)
        z = np.random.default_rng(3).uniform(-0.5, 0.5, nlp.n)
        hessian = nlp.hessian(z, 1.0, np.random.default_rng(4).normal(size=nlp.m)).toarray()
        assert np.min(np.linalg.eigvalsh(hessian)) >= -1e-9

    def test_bad_mesh(self):
        with pytest.raises(ArgumentError):
            HermiteSimpson(pendulum(), 0.0, 2.0, 0)
        with pytest.raises(ArgumentError):
            HermiteSimpson(pendulum(), 2.0, 2.0, 4)

    def test_unordered_bounds(self):
        with pytest.raises(ArgumentError):
            CollocationModel(
                point=None,
                state_scale=[1.0],
                control_scale=[1.0],
                state_lower=[1.0],
                state_upper=[0.0],
                control_lower=[0.0],
                control_upper=[1.0],
            )


class TestControlSchedule:
    def test_reproduces_quadratics(self):
        t_i, h, segments = 2.0, 0.5, 4
        mesh = t_i + 0.5 * h * np.arange(2 * segments + 1)

        def rates(t):
            t = np.asarray(t, dtype=float)
            return np.stack([0.1 * t**2 - t, 3.0 * t - 1.0], axis=-1)

        schedule = ControlSchedule(t_i, h, rates(mesh))
        t = np.linspace(t_i, t_i + h * segments, 37)
        np.testing.assert_allclose(schedule(t), rates(t), atol=1e-12)
        np.testing.assert_allclose(schedule(2.3), rates(2.3), atol=1e-12)


class TestTrim:
    def test_below_rated(self, plant):
        trim = trim_state(plant, 7.0, sigma_max=45e6)
        outputs = point_outputs(plant, trim, u_wind=7.0)
        assert trim.theta_b == 0.0
        assert 0 < outputs["P_a"] < plant.params.limits.rated_power
        assert trim.tau_g == pytest.approx(outputs["tau_a"], rel=1e-9)

    def test_above_rated(self, plant):
        trim = trim_state(plant, 18.0, sigma_max=45e6)
        outputs = point_outputs(plant, trim, u_wind=18.0)
        assert trim.theta_b > 0.0
        assert outputs["P_a"] <= plant.params.limits.rated_power * (1 + 1e-9)
        assert outputs["sigma"] <= 45e6

    def test_negative_wind(self, plant):
        with pytest.raises(ArgumentError):
            trim_state(plant, -1.0, sigma_max=45e6)


class TestPlantProblem:
    @pytest.fixture(scope="class")
    def problem(self, plant):
        return build_problem(plant, 9.0, OlocConfig(t_f=20.0, segments=2))

    def test_bounds(self, problem):
        lower, upper = problem.state_bounds()
        assert lower.size == N_STATES
        assert (lower[IX["theta_b"]], upper[IX["theta_b"]]) == problem.plant.params.limits.blade_pitch
        assert np.isinf(upper[IX["E_g"]])
        p_lower, p_upper = problem.path_bounds()
        assert PATH_NAMES == ("sigma_signed", "P_u")
        np.testing.assert_allclose(p_upper, [45e6, 5e6])
        assert problem.with_sigma_max(90.0).sigma_max == 90e6

    def test_trim_satisfies_the_defects(self, problem):
        nlp = transcribe(problem)
        z0 = trim_guess(problem, nlp)
        c = nlp.constraints(z0)
        defects = c[nlp.n_initial : nlp.n_initial + nlp.n_defect]
        assert np.max(np.abs(defects)) < 1e-5
        assert np.max(np.abs(c[: nlp.n_initial])) < 1e-9

    def test_inner_objective(self, problem):
        nlp = transcribe(problem)
        X, U = nlp.unpack(trim_guess(problem, nlp))
        trajectory = evaluate_trajectory(problem.plant, nlp.time, X, U, problem.wind, problem.waves)
        J_in, P_out = inner_objective(trajectory)
        assert J_in == pytest.approx(-20.0 * P_out)
        assert P_out == pytest.approx(float(trajectory.channel("P_a")[0]), rel=1e-9)
        assert check_feasibility(trajectory, problem).feasible


@pytest.mark.slow
class TestBinSolve:
    def test_solution_replays_forward(self, plant):
        problem = build_problem(plant, 10.0, OlocConfig(t_f=20.0, segments=10))
        nlp = transcribe(problem)
        solution = solve_nlp(problem, nlp)
        assert solution.success
        assert solution.feasibility.feasible
        assert solution.P_u_mean <= plant.params.limits.rated_power * (1 + 1e-6)
        gaps = forward_check(problem, solution)
        assert max(gaps.values()) < 0.05

    def test_below_rated_tracks_the_power_ridge(self, plant):
        solution = solve_oloc(plant, 8.0, OlocConfig(t_f=20.0, segments=10))
        assert solution.success
        ridge = optimal_tsr(plant.surface)
        assert 7.0 <= ridge <= 8.5
        tsr = solution.trajectory.channel("tsr")
        assert float(np.median(tsr)) == pytest.approx(ridge, rel=0.1)
        assert solution.P_u_mean < plant.params.limits.rated_power

    def test_above_rated_holds_rated_power(self, plant):
        # stress limit relaxed so only the power rating binds
        solution = solve_oloc(plant, 14.0, OlocConfig(t_f=20.0, segments=10, sigma_max_mpa=200.0))
        assert solution.success
        assert solution.feasibility.feasible
        assert solution.P_u_mean == pytest.approx(5e6, rel=0.02)
