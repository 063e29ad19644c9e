import numpy as np
import pytest
from autograd import grad
import autograd.numpy as anp

from fowtccd.errors import ExtrapolationError, OutOfEnvelopeError, SurrogateFormatError, TrainingFailure
from fowtccd.model.plant import static_mooring_pretension
from fowtccd.mooring.catenary import SEABED, SUSPENDED, line_profile, regime_boundary, solve_catenary
from fowtccd.mooring.layout import MooringLayout, exact_line_forces, exact_mooring_loads, mooring_loads
from fowtccd.mooring.surrogate import (
    FORMAT_HEADER,
    eval_surrogate,
    fit_network,
    load_surrogate,
    max_relative_error,
    sample_forces,
    save_surrogate,
    train_surrogate,
)


class TestCatenary:
    def test_suspended_line_closes(self, line):
        result = solve_catenary(870.0, 250.0, line)
        assert result.regime == SUSPENDED
        assert result.touchdown == 0.0
        assert result.F_V > line.total_weight
        value, _ = line_profile(result.F_H, result.F_V, line)
        np.testing.assert_allclose(value, [870.0, 250.0], atol=1e-8)

    def test_line_on_the_seabed(self, line):
        result = solve_catenary(840.0, 250.0, line)
        assert result.regime == SEABED
        assert 0 < result.F_V < line.total_weight
        assert result.touchdown == pytest.approx(line.length - result.F_V / line.weight)
        value, _ = line_profile(result.F_H, result.F_V, line)
        np.testing.assert_allclose(value, [840.0, 250.0], atol=1e-8)

    def test_slack_line_hangs_straight(self, line):
        result = solve_catenary(600.0, 250.0, line)
        assert result.F_H == 0.0
        assert result.F_V == pytest.approx(line.weight * 250.0)
        assert result.touchdown == pytest.approx(line.length - 250.0)

    def test_horizontal_tension_grows_with_offset(self, line):
        tensions = [solve_catenary(l, 250.0, line).F_H for l in (830.0, 845.0, 860.0, 875.0)]
        assert np.all(np.diff(tensions) > 0)

    def test_continuous_across_regimes(self, line):
        boundary = regime_boundary(250.0, line)
        assert 826.0 < boundary < 876.0
        below = solve_catenary(boundary - 1e-6, 250.0, line)
        above = solve_catenary(boundary + 1e-6, 250.0, line)
        assert below.F_H == pytest.approx(above.F_H, rel=1e-5)
        assert below.F_V == pytest.approx(above.F_V, rel=1e-5)
        assert below.F_V == pytest.approx(line.total_weight, rel=1e-5)

    @pytest.mark.parametrize("H,V", [(1.2e5, 1.5e5), (2.0e5, 7.0e5)])
    def test_profile_jacobian(self, line, H, V):
        _, jac = line_profile(H, V, line)
        numeric = np.empty((2, 2))
        for j, step in enumerate((1e-3 * H, 1e-3 * V)):
            delta = np.zeros(2)
            delta[j] = step
            plus, _ = line_profile(H + delta[0], V + delta[1], line)
            minus, _ = line_profile(H - delta[0], V - delta[1], line)
            numeric[:, j] = (plus - minus) / (2 * step)
        np.testing.assert_allclose(jac, numeric, rtol=1e-5, atol=1e-12)

    @pytest.mark.parametrize("l,h", [(900.0, 300.0), (-1.0, 250.0), (850.0, 0.0)])
    def test_out_of_envelope(self, line, l, h):
        with pytest.raises(OutOfEnvelopeError):
            solve_catenary(l, h, line)


class TestLayout:
    def test_design_pose_offsets(self, params):
        layout = MooringLayout.from_parameters(params)
        l, h, cos_x = layout.offsets(0.0, 0.0, 0.0)
        spacing = params.mooring.anchor_radius - params.mooring.fairlead_radius
        np.testing.assert_allclose(l, spacing)
        np.testing.assert_allclose(h, params.mooring.anchor_depth - params.mooring.fairlead_depth)
        np.testing.assert_allclose(cos_x, [-1.0, 0.5, 0.5], atol=1e-12)

    def test_symmetric_at_rest(self, params, line):
        layout = MooringLayout.from_parameters(params)
        load = exact_mooring_loads(0.0, 0.0, 0.0, layout, line)
        assert abs(load.F[0]) < 1e-9 * abs(load.F[1])
        assert abs(load.M) < 1e-9 * abs(load.F[1])
        assert load.F[1] < 0

    def test_surge_restoring(self, params, line):
        layout = MooringLayout.from_parameters(params)
        assert exact_mooring_loads(10.0, 0.0, 0.0, layout, line).F[0] < 0
        assert exact_mooring_loads(-8.0, 0.0, 0.0, layout, line).F[0] > 0

    def test_batched_loads(self, params, line):
        layout = MooringLayout.from_parameters(params)
        x = np.array([0.0, 5.0])
        F_x, F_z, M = layout.loads(x, np.zeros(2), np.zeros(2), exact_line_forces(line))
        assert F_x.shape == (2,)
        assert F_x[1] == pytest.approx(exact_mooring_loads(5.0, 0.0, 0.0, layout, line).F[0])

    def test_surrogate_tracks_exact_loads(self, params, line, small_surrogate):
        layout = MooringLayout.from_parameters(params)
        exact = exact_mooring_loads(0.0, 0.0, 0.0, layout, line)
        approx = mooring_loads(0.0, 0.0, 0.0, layout, small_surrogate)
        assert approx.F[1] == pytest.approx(exact.F[1], rel=0.1)
        assert approx.tag == "moor"

    def test_pretension(self, params, small_surrogate):
        assert static_mooring_pretension(params, None) == 0.0
        assert static_mooring_pretension(params, small_surrogate) > 0


class TestSurrogate:
    def test_affine_fit_is_exact_on_affine_data(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(0, 1, (50, 2))
        Y = X @ np.array([[2.0, -1.0], [0.5, 3.0]]) + np.array([1.0, 4.0])
        X_val = rng.uniform(0, 1, (10, 2))
        Y_val = X_val @ np.array([[2.0, -1.0], [0.5, 3.0]]) + np.array([1.0, 4.0])
        net, error = fit_network(X, Y, X_val, Y_val, hidden=())
        assert np.max(error) < 1e-10
        assert net.layer_sizes == [2, 2]

    def test_domain_is_enforced(self, small_surrogate):
        eval_surrogate(small_surrogate, 850.0, 250.0)
        with pytest.raises(ExtrapolationError):
            eval_surrogate(small_surrogate, 900.0, 250.0)
        with pytest.raises(ExtrapolationError):
            eval_surrogate(small_surrogate, 850.0, 230.0)

    def test_differentiable(self, small_surrogate):
        def horizontal(l):
            F_H, _ = small_surrogate.forces(anp.array([l]), anp.array([250.0]))
            return F_H[0]

        l, h = 845.0, 1e-3
        numeric = (horizontal(l + h) - horizontal(l - h)) / (2 * h)
        assert grad(horizontal)(l) == pytest.approx(numeric, rel=1e-5, abs=1e-6)

    def test_pointwise_error_with_floor(self):
        exact = np.array([[100.0, 10.0], [1.0, 20.0]])
        predicted = np.array([[101.0, 10.0], [2.0, 20.2]])
        # the 1 N value is measured against 5% of the 100 N maximum
        np.testing.assert_allclose(max_relative_error(predicted, exact), [0.2, 0.01])
        np.testing.assert_allclose(max_relative_error(predicted, exact, floor=0.0), [1.0, 0.01])

    def test_same_seed_same_weights(self, line, mooring_domain, small_surrogate):
        again = train_surrogate(
            line,
            mooring_domain,
            training_samples=300,
            validation_samples=100,
            hidden=(8,),
            seed=0,
            max_relative_error=1.0,
        )
        for regime in (SUSPENDED, SEABED):
            first, second = small_surrogate.network(regime), again.network(regime)
            for a, b in zip(first.weights + first.biases, second.weights + second.biases):
                np.testing.assert_array_equal(a, b)
        assert again.report == small_surrogate.report

    def test_training_failure(self, line, mooring_domain):
        with pytest.raises(TrainingFailure):
            train_surrogate(line, mooring_domain, training_samples=200, validation_samples=60, hidden=(), max_relative_error=1e-9)

    def test_save_and_load_exactly(self, small_surrogate, tmp_path):
        path = save_surrogate(small_surrogate, str(tmp_path / "cache" / "surrogate.txt"))
        loaded = load_surrogate(path)
        assert loaded.domain == small_surrogate.domain
        assert loaded.line == small_surrogate.line
        np.testing.assert_array_equal(loaded.boundary_l, small_surrogate.boundary_l)
        l = np.linspace(827.0, 875.0, 25)
        h = np.linspace(241.0, 259.0, 25)
        for before, after in zip(small_surrogate.forces(l, h), loaded.forces(l, h)):
            np.testing.assert_array_equal(np.asarray(before), np.asarray(after))

    def test_unknown_header(self, small_surrogate, tmp_path):
        path = save_surrogate(small_surrogate, str(tmp_path / "surrogate.txt"))
        with open(path) as f:
            text = f.read()
        with open(path, "w") as f:
            f.write(text.replace(FORMAT_HEADER, "fowtccd-mooring-surrogate v0"))
        with pytest.raises(SurrogateFormatError):
            load_surrogate(path)

    def test_truncated_file(self, small_surrogate, tmp_path):
        path = save_surrogate(small_surrogate, str(tmp_path / "surrogate.txt"))
        with open(path) as f:
            lines = f.readlines()
        with open(path, "w") as f:
            f.writelines(lines[: len(lines) // 2])
        with pytest.raises(SurrogateFormatError):
            load_surrogate(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SurrogateFormatError):
            load_surrogate(str(tmp_path / "nothing.txt"))


@pytest.fixture(scope="module")
def default_surrogate(params, line, mooring_domain):
    config = params.mooring.surrogate
    return train_surrogate(
        line,
        mooring_domain,
        training_samples=config["training_samples"],
        validation_samples=config["validation_samples"],
        hidden=tuple(config["hidden_layers"]),
        seed=config["seed"],
        max_relative_error=config["max_relative_error"],
    )


def _grid(mooring_domain, count=25):
    (l_lo, l_hi), (h_lo, h_hi) = mooring_domain
    L, H = np.meshgrid(np.linspace(l_lo, l_hi, count), np.linspace(h_lo, h_hi, count), indexing="ij")
    return np.column_stack([L.ravel(), H.ravel()])


class TestSurrogateAccuracy:
    def test_default_network_meets_threshold(self, default_surrogate):
        assert max(max(errors.values()) for errors in default_surrogate.report.values()) <= 0.01

    def test_dense_grid_error(self, default_surrogate, line, mooring_domain):
        points = _grid(mooring_domain)
        exact, _ = sample_forces(line, points)
        F_H, F_V = default_surrogate.forces(points[:, 0], points[:, 1])
        error = max_relative_error(np.column_stack([F_H, F_V]), exact)
        assert np.all(error < 0.01)

    def test_regime_boundary_jump(self, default_surrogate, line, mooring_domain):
        h = np.linspace(mooring_domain[1][0], mooring_domain[1][1], 21)
        l = np.array([regime_boundary(v, line) for v in h])
        points = np.column_stack([l, h])
        suspended = default_surrogate.network(SUSPENDED).forward(points)
        seabed = default_surrogate.network(SEABED).forward(points)
        exact, _ = sample_forces(line, points)
        assert np.max(np.abs(suspended - seabed) / np.abs(exact)) < 0.02

    def test_regimes_match_exact_solver(self, default_surrogate, line, mooring_domain):
        points = _grid(mooring_domain)
        _, regimes = sample_forces(line, points)
        boundary = np.array([regime_boundary(h, line) for h in points[:, 1]])
        clear = np.abs(points[:, 0] - boundary) > 0.05
        chosen = np.where(points[:, 0] > default_surrogate.boundary(points[:, 1]), SUSPENDED, SEABED)
        assert np.any(regimes == SUSPENDED) and np.any(regimes == SEABED)
        np.testing.assert_array_equal(chosen[clear], regimes[clear])
