from types import SimpleNamespace

import numpy as np
import pytest

from fowtccd.ccd.cmaes import MAX_GENERATIONS, CmaEvolutionStrategy, cmaes_run
from fowtccd.ccd.design import DesignSpace, PlantDesign, design_bounds, design_from_record, variable_names
from fowtccd.ccd.evaluate import PENALISED, AepResult, PlantEvaluator, aep_from_powers
from fowtccd.ccd.runner import ccd_run, comparison_table, generation_frame, sensitivity_scan
from fowtccd.environment.wind import HOURS_PER_YEAR
from fowtccd.errors import ArgumentError, InvalidDesignError, RootFindError
from fowtccd.settings import ScenarioSettings
from fowtccd.workbench import Workbench


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


def rosenbrock(x):
    return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2)


def _result(power, objective=None, **extra):
    return AepResult(
        P_out=[power],
        probabilities=[1.0],
        statuses=["optimal"],
        objective=-HOURS_PER_YEAR * power if objective is None else objective,
        **extra,
    )


class TallerIsBetter:
    """Stand-in evaluator whose power grows with the tower length."""

    def __init__(self):
        self.calls = 0

    def evaluate(self, design, check_bounds=True):
        self.calls += 1
        return _result(1e6 * (1.0 + design.tower.l / 100.0), tower_mass=3e5, platform_mass=7e6)


@pytest.fixture
def workbench(scenario_file):
    return Workbench(ScenarioSettings(scenario_file(components="hs")))


class TestCmaes:
    def test_sphere(self):
        result = cmaes_run(sphere, [1.0, -2.0, 0.5], 0.5, generations=400, seed=1)
        assert result.f < 1e-10
        assert np.all(np.diff(result.best_per_generation) <= 0)

    def test_rosenbrock(self):
        result = cmaes_run(rosenbrock, [-1.0, 1.0], 0.5, population=10, generations=1000, seed=3)
        np.testing.assert_allclose(result.x, [1.0, 1.0], atol=1e-3)

    def test_same_seed_same_run(self):
        first = cmaes_run(rosenbrock, [0.0, 0.0], 0.3, generations=20, seed=7)
        second = cmaes_run(rosenbrock, [0.0, 0.0], 0.3, generations=20, seed=7)
        np.testing.assert_array_equal(first.x, second.x)
        assert [row["f"] for row in first.history] == [row["f"] for row in second.history]

    def test_box_bounded_optimum(self):
        result = cmaes_run(
            lambda x: float(np.sum((np.asarray(x) - 2.0) ** 2)),
            [0.5, 0.5],
            0.3,
            generations=100,
            seed=0,
            lower=np.zeros(2),
            upper=np.ones(2),
        )
        assert np.all(result.x >= 0) and np.all(result.x <= 1)
        np.testing.assert_allclose(result.x, [1.0, 1.0], atol=1e-3)
        assert result.f == pytest.approx(2.0, abs=1e-5)

    def test_zero_generations_returns_start(self):
        calls = []

        def objective(x):
            calls.append(np.copy(x))
            return sphere(x)

        result = cmaes_run(objective, [0.3, 0.4], 0.2, generations=0)
        np.testing.assert_array_equal(result.x, [0.3, 0.4])
        assert result.f == pytest.approx(0.25)
        assert result.status == MAX_GENERATIONS
        assert len(calls) == 1

    def test_one_generation_history(self):
        result = cmaes_run(sphere, [1.0, 1.0], 0.2, population=6, generations=1)
        assert len(result.history) == 1 + 6
        assert result.state.evaluations == 6

    def test_bad_arguments(self):
        with pytest.raises(ArgumentError):
            CmaEvolutionStrategy([0.0, 0.0], 0.1, population=3)
        with pytest.raises(ArgumentError):
            CmaEvolutionStrategy([0.0], 0.0)


class TestDesign:
    def test_baseline_vectors(self, params):
        tower = PlantDesign.baseline(params)
        np.testing.assert_allclose(tower.as_vector(), [0.019, 3.87, 0.027, 77.6])
        both = PlantDesign.baseline(params, mode="tower_blades")
        assert both.as_vector().size == 14
        assert variable_names(params, "tower_blades")[4:6] == ("twist_4", "twist_6")

    def test_with_vector(self, params):
        design = PlantDesign.baseline(params)
        changed = design.with_vector([0.02, 4.0, 0.03, 80.0])
        assert changed.tower.l == 80.0 and changed.tower.d_tip == 4.0
        assert changed.tower.d_base == design.tower.d_base
        assert changed.blade == design.blade
        with pytest.raises(ArgumentError):
            design.with_vector([0.02, 4.0, 0.03])

    def test_validate(self, params):
        design = PlantDesign.baseline(params)
        assert design.validate(params) is design
        with pytest.raises(InvalidDesignError):
            design.with_vector([0.019, 3.87, 0.027, 95.0]).validate(params)

    def test_unknown_mode(self, params):
        with pytest.raises(ArgumentError):
            PlantDesign.baseline(params, mode="blades")

    def test_unit_cube_map(self, params):
        space = DesignSpace(params)
        lower, upper = design_bounds(params, "tower")
        np.testing.assert_allclose(space.normalize(lower), 0.0)
        np.testing.assert_allclose(space.normalize(upper), 1.0)
        x = space.base.as_vector()
        np.testing.assert_allclose(space.denormalize(space.normalize(x)), x)
        assert space.design(np.full(4, 0.5)).tower.l == pytest.approx(80.0)

    def test_from_record(self, params):
        design = design_from_record(params, {"l": 85.0})
        assert design.mode == "tower" and design.tower.l == 85.0
        assert design.tower.t_tip == params.tower.baseline.t_tip
        blades = design_from_record(params, {"twist_4": 12.0, "chord_17": 1.2})
        assert blades.mode == "tower_blades"
        assert blades.blade.twist[0] == 12.0 and blades.blade.chord[-1] == 1.2
        with pytest.raises(ArgumentError):
            design_from_record(params, {"hub_height": 90.0})

    def test_record_round_trip_keeps_mode(self, params):
        design = PlantDesign.baseline(params).with_vector([0.02, 4.0, 0.03, 80.0])
        back = design_from_record(params, design.as_dict(params), mode="tower")
        assert back.mode == "tower"
        np.testing.assert_allclose(back.as_vector(), design.as_vector())


class TestAep:
    def test_from_powers(self):
        assert aep_from_powers([1e6, 2e6], [0.25, 0.75]) == pytest.approx(HOURS_PER_YEAR * 1.75e6)

    def test_result_properties(self):
        result = _result(2e6)
        assert result.AEP == pytest.approx(HOURS_PER_YEAR * 2e6)
        assert result.J_out == -result.AEP
        assert result.as_dict()["statuses"] == "optimal"


class TestPlantEvaluator:
    def _solution(self, status="optimal", feasible=True, P_out=2e6):
        return SimpleNamespace(status=status, P_out=P_out, feasibility=SimpleNamespace(feasible=feasible))

    def test_aep_over_bins(self, workbench, mocker):
        solve = mocker.patch("fowtccd.ccd.evaluate.solve_oloc", return_value=self._solution())
        evaluator = PlantEvaluator(workbench)
        result = evaluator.evaluate(PlantDesign.baseline(workbench.params))
        assert solve.call_count == len(evaluator.bins) == 3
        assert not result.penalised
        assert result.AEP == pytest.approx(HOURS_PER_YEAR * 2e6, rel=1e-12)
        assert result.objective == result.J_out
        assert result.tower_mass > 0 and result.platform_mass > 0
        assert len(result.wind_speeds) == 3

    def test_invalid_design_is_penalised(self, workbench, mocker):
        solve = mocker.patch("fowtccd.ccd.evaluate.solve_oloc")
        design = PlantDesign.baseline(workbench.params).with_vector([0.019, 3.87, 0.027, 95.0])
        result = PlantEvaluator(workbench).evaluate(design)
        assert result.penalised
        assert result.objective == 1e15
        assert result.statuses == [PENALISED]
        assert "InvalidDesignError" in result.reason
        solve.assert_not_called()

    def test_failed_bin_is_penalised(self, workbench, mocker):
        mocker.patch(
            "fowtccd.ccd.evaluate.solve_oloc",
            side_effect=[self._solution(), RootFindError("no trim"), self._solution()],
        )
        result = PlantEvaluator(workbench, penalty=1e12).evaluate(PlantDesign.baseline(workbench.params))
        assert result.penalised and result.objective == 1e12
        assert result.statuses == ["optimal", "error"]

    def test_infeasible_bin_is_penalised(self, workbench, mocker):
        mocker.patch(
            "fowtccd.ccd.evaluate.solve_oloc",
            return_value=self._solution(status="max_iterations", feasible=False),
        )
        result = PlantEvaluator(workbench).evaluate(PlantDesign.baseline(workbench.params))
        assert result.penalised

    def test_feasible_non_optimal_bin_counts(self, workbench, mocker):
        mocker.patch(
            "fowtccd.ccd.evaluate.solve_oloc",
            return_value=self._solution(status="max_iterations", feasible=True),
        )
        result = PlantEvaluator(workbench).evaluate(PlantDesign.baseline(workbench.params))
        assert not result.penalised
        assert result.statuses == ["max_iterations"] * 3


class TestCcdRun:
    def test_run_improves_on_baseline(self, workbench):
        evaluator = TallerIsBetter()
        report = ccd_run(workbench, seed=2, generations=3, population=4, evaluator=evaluator)
        assert evaluator.calls == 1 + 3 * 4
        assert len(report.history) == 13
        assert report.mode == "tower"
        assert report.best_result.AEP >= report.baseline_result.AEP
        assert report.aep_gain >= 0
        assert report.baseline == PlantDesign.baseline(workbench.params)
        lower, upper = design_bounds(workbench.params, "tower")
        x = report.best.as_vector()
        assert np.all(x >= lower - 1e-12) and np.all(x <= upper + 1e-12)
        assert list(generation_frame(report)["generation"]) == [0, 1, 2, 3]

        table = comparison_table(report, workbench.params)
        assert table["case"].tolist() == ["baseline", "tower"]
        assert table.loc[0, "AEP_gain_pct"] == 0.0
        assert table.loc[1, "l"] == report.best.tower.l

    def test_zero_generations_keeps_baseline(self, workbench):
        report = ccd_run(workbench, generations=0, evaluator=TallerIsBetter())
        np.testing.assert_allclose(report.best.as_vector(), report.baseline.as_vector(), rtol=1e-12)
        assert report.aep_gain == 0.0


class TestSensitivity:
    def test_scan(self, params):
        design = PlantDesign.baseline(params)
        scan = sensitivity_scan(design, lambda d: _result(1e6 * d.tower.l))
        assert len(scan) == 8
        assert scan["variable"].tolist()[:2] == ["t_tip-", "t_tip+"]
        length = scan.set_index("variable").loc["l+"]
        assert length["delta_rel"] == pytest.approx(5.0)
        assert length["dJ_rel"] == pytest.approx(5.0)
        assert length["ratio"] == pytest.approx(1.0)
        assert scan.set_index("variable").loc["d_tip-", "dJ_rel"] == pytest.approx(0.0)
        assert not scan["penalised"].any()

    def test_penalised_rows_are_not_gains(self, params):
        design = PlantDesign.baseline(params)
        base_l = design.tower.l

        def evaluate(d):
            if d.tower.l > base_l:
                return _result(0.0, objective=1e15, penalised=True, reason="ballast")
            return _result(1e6 * d.tower.l)

        scan = sensitivity_scan(design, evaluate).set_index("variable")
        assert scan.loc["l+", "penalised"]
        assert np.isnan(scan.loc["l+", "dJ_rel"]) and np.isnan(scan.loc["l+", "ratio"])
        assert scan.loc["l+", "J_out"] == 1e15
        # a shorter tower loses energy
        assert scan.loc["l-", "dJ_rel"] == pytest.approx(-5.0)
        assert not scan.drop(index="l+")["penalised"].any()

    def test_penalised_reference(self, params):
        design = PlantDesign.baseline(params)
        with pytest.raises(InvalidDesignError):
            sensitivity_scan(design, lambda d: _result(0.0, objective=1e15, penalised=True, reason="ballast"))
