import os
import sys
import json
import click
import traceback
import numpy as np
from functools import wraps
from fowtccd.errors import ArgumentError, FowtCcdError
from fowtccd.outputs import RunDirectory, error_record, package_version
from fowtccd.settings import ScenarioSettings
from fowtccd.workbench import Workbench
from fowtccd.ccd.design import PlantDesign, design_from_record
from fowtccd.ccd.evaluate import PlantEvaluator
from fowtccd.ccd.runner import ccd_run, comparison_table, generation_frame, sensitivity_scan
from fowtccd.model.dynamics import simulate_forward
from fowtccd.mooring.surrogate import save_surrogate
from fowtccd.oloc.problem import build_problem, transcribe
from fowtccd.oloc.solution import check_feasibility, forward_check, solve_nlp, write_solution
from fowtccd.studies.registry import StudyRegistry


def scenario_options(command):
    """Options every command shares: scenario file and the scalar overrides."""
    options = [
        click.option("--scenario", type=click.Path(), default=None, help="Scenario INI file (default $FOWTCCD_SCENARIO)."),
        click.option("--seed", type=int, default=None, help="Seed of the evolution strategy."),
        click.option("--mode", default=None, help="Design mode: tower or tower_blades."),
        click.option("--sigma-max", type=float, default=None, help="Tower stress limit [MPa]."),
        click.option("--waves/--no-waves", default=None, help="Irregular waves on or off."),
        click.option("--output", type=click.Path(), default=None, help="Base directory for run directories."),
        click.option("--set", "assignments", multiple=True, help="Override section.key=value (repeatable)."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def collect_overrides(seed, mode, sigma_max, waves, output, assignments):
    overrides = {}
    for assignment in assignments:
        key, sep, value = assignment.partition("=")
        if not sep:
            raise click.BadParameter(f"expected section.key=value, got {assignment!r}", param_hint="--set")
        overrides[key.strip()] = value.strip()
    for key, value in (
        ("ccd.seed", seed),
        ("ccd.mode", mode),
        ("oloc.sigma_max_mpa", sigma_max),
        ("wave.enabled", None if waves is None else str(waves).lower()),
        ("output.directory", output),
    ):
        if value is not None:
            overrides[key] = str(value)
    return overrides


def load_design(workbench, path):
    if not path:
        return None
    try:
        with open(path, "r") as f:
            record = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ArgumentError(f"Unreadable design file {path}: {e}", details={"path": path}) from e
    return design_from_record(workbench.params, record.get("design", record), mode=record.get("mode"))


def run_command(name):
    """Wrap a command body with the run directory, manifest, logging and error handling.

    The body receives (workbench, run_dir, overrides, **options) and may return extra manifest entries.
    """

    def decorator(body):
        @wraps(body)
        def wrapper(scenario, seed, mode, sigma_max, waves, output, assignments, **options):
            overrides = collect_overrides(seed, mode, sigma_max, waves, output, assignments)
            run_dir = None
            workbench = None
            try:
                settings = ScenarioSettings(scenario, overrides)
                run_dir = RunDirectory(settings.output.directory, name)
                os.environ["LOG_DIRECTORY"] = str(run_dir)
                workbench = Workbench(settings)
                workbench.log_info(f"{name} started with {settings!r}")
                extra = body(workbench, run_dir, overrides, **options) or {}
                settings.write(run_dir.file("scenario.ini"))
                run_dir.manifest("scenario.ini", {"source_scenario": os.path.abspath(settings.scenario_path), **extra})
                click.echo(str(run_dir))
            except FowtCcdError as e:
                fail(e, e.exit_code, run_dir, workbench)
            except Exception as e:
                traceback.print_exc()
                fail(e, 1, run_dir, workbench)

        return wrapper

    return decorator


def fail(error, exit_code, run_dir, workbench):
    if workbench is not None:
        workbench.log_failure(error, "Command failed")
    record = run_dir.error(error, exit_code) if run_dir is not None else error_record(error, exit_code)
    click.echo(json.dumps(record, default=str), err=True)
    sys.exit(exit_code)


def write_frames(run_dir, frames):
    return [run_dir.frame(f"{stem}.csv", frame) for stem, frame in frames.items()]


@click.group(invoke_without_command=True)
@click.option("--version", is_flag=True, help="Show the version of fowtccd.")
@click.pass_context
def cli(ctx, version):
    """Control co-design workbench for a spar floating wind turbine."""
    if version:
        click.echo(f"fowtccd:{package_version()}")
    elif ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@click.command()
@scenario_options
@click.option("--bin", "u_bar", type=float, default=14.0, show_default=True, help="Mean wind speed [m/s].")
@click.option("--design", "design_path", type=click.Path(), default=None, help="Design JSON (default baseline).")
@click.option("--steady", is_flag=True, help="Constant wind instead of the fluctuating profile.")
@run_command("simulate")
def simulate(workbench, run_dir, overrides, u_bar, design_path, steady):
    """
    Forward simulation holding the steady trim (zero control rates).
    """
    design = load_design(workbench, design_path) or PlantDesign.baseline(workbench.params)
    plant = workbench.plant(design.tower, design.blade)
    u_hub = workbench.hub_wind(u_bar, design.tower.l)
    settings = workbench.settings.oloc
    problem = build_problem(
        plant, u_hub, settings, wind=workbench.wind(u_hub, steady=steady), waves=workbench.waves(plant), logger=workbench.logger
    )
    trajectory = simulate_forward(
        plant, lambda t: np.zeros(2), problem.wind, problem.x0, settings.t_i, settings.t_f, waves=problem.waves
    )
    run_dir.frame("trajectory.csv", trajectory.frame(with_controls=True))
    feasibility = check_feasibility(trajectory, problem, settings.feasibility_tol)
    run_dir.json("summary.json", {"u_hub": u_hub, "feasibility": feasibility.as_dict()})


@click.command()
@scenario_options
@click.option("--bin", "u_bar", type=float, required=True, help="Mean wind speed of the bin [m/s].")
@click.option("--design", "design_path", type=click.Path(), default=None, help="Design JSON (default baseline).")
@click.option("--steady", is_flag=True, help="Constant wind instead of the fluctuating profile.")
@click.option("--check", is_flag=True, help="Re-integrate the controls and report the per-channel gap.")
@run_command("oloc")
def oloc(workbench, run_dir, overrides, u_bar, design_path, steady, check):
    """
    Optimal control of one wind bin; writes the trajectory and a summary.
    usage:
        fowtccd-cli oloc --scenario scenario.ini --bin 14
    """
    design = load_design(workbench, design_path) or PlantDesign.baseline(workbench.params)
    plant = workbench.plant(design.tower, design.blade)
    u_hub = workbench.hub_wind(u_bar, design.tower.l)
    problem = build_problem(
        plant, u_hub, workbench.settings.oloc, wind=workbench.wind(u_hub, steady=steady), waves=workbench.waves(plant), logger=workbench.logger
    )
    solution = solve_nlp(problem, transcribe(problem))
    paths = write_solution(solution, run_dir.path)
    run_dir.files.extend(os.path.basename(p) for p in paths.values())
    extra = {"status": solution.status}
    if check:
        gaps = forward_check(problem, solution)
        run_dir.json("forward_check.json", gaps)
        extra["forward_check_max"] = max(gaps.values())
    return extra


@click.command()
@scenario_options
@click.option("--generations", type=int, default=None, help="Generation budget (default from scenario).")
@click.option("--population", type=int, default=None, help="Population size (default from scenario).")
@run_command("ccd")
def ccd(workbench, run_dir, overrides, generations, population):
    """
    Optimise the plant design for AEP with nested optimal control.
    usage:
        fowtccd-cli ccd --mode tower --seed 7
    """
    report = ccd_run(workbench, generations=generations, population=population, overrides=overrides)
    params = workbench.params
    run_dir.frame("history.csv", report.history)
    run_dir.frame("comparison.csv", comparison_table(report, params))
    run_dir.frame("generations.csv", generation_frame(report))
    run_dir.json(
        "best_design.json",
        {"mode": report.mode, "design": report.best.as_dict(params), "result": report.best_result.as_dict()},
    )
    return {"status": report.status, "aep_gain_pct": report.aep_gain}


@click.command()
@scenario_options
@click.option("--design", "design_path", type=click.Path(), default=None, help="Design JSON (default baseline).")
@click.option("--delta", type=float, default=None, help="Relative perturbation (default from scenario).")
@run_command("sensitivity")
def sensitivity(workbench, run_dir, overrides, design_path, delta):
    """
    Objective change for +/- perturbations of each tower variable.
    """
    design = load_design(workbench, design_path) or PlantDesign.baseline(workbench.params)
    evaluator = PlantEvaluator(workbench)
    delta = workbench.settings.ccd.perturbation if delta is None else delta
    table = sensitivity_scan(design, lambda d: evaluator.evaluate(d, check_bounds=False), delta=delta)
    run_dir.frame("sensitivity.csv", table)


@click.command("train-mooring")
@scenario_options
@click.option("--training-samples", type=int, default=None, help="Training sample count.")
@click.option("--hidden", default=None, help="Hidden layer sizes, e.g. 16,16.")
@click.option("--install", is_flag=True, help="Also store the surrogate at the scenario's surrogate path.")
@run_command("train-mooring")
def train_mooring(workbench, run_dir, overrides, training_samples, hidden, install):
    """
    Train the two-regime mooring surrogate against the catenary solver.
    """
    changes = {}
    if training_samples:
        changes["training_samples"] = training_samples
    if hidden:
        changes["hidden_layers"] = [int(v) for v in hidden.split(",")]
    surrogate = workbench.train_surrogate(**changes)
    save_surrogate(surrogate, str(run_dir.file("mooring_surrogate.txt")))
    run_dir.json("validation.json", surrogate.report)
    if install:
        path = workbench.settings.resolve(workbench.settings.mooring.surrogate_path)
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        save_surrogate(surrogate, path)
        return {"installed": path}


def study_command(name, help_text, extra_options=()):
    """A command that runs the registered study ``name`` and writes its tables."""

    def body(workbench, run_dir, overrides, **options):
        study_class = StudyRegistry.get_study(name)
        if study_class is None:
            StudyRegistry.load_plugins()
            study_class = StudyRegistry.get_study(name)
        if study_class is None:
            raise ArgumentError(f"No study registered as {name!r}", details={"studies": StudyRegistry.names()})
        context = {k: v for k, v in options.items() if v is not None}
        design_path = context.pop("design_path", None)
        if design_path:
            context["design"] = load_design(workbench, design_path)
        if context.get("case2_path"):
            context["case2"] = load_design(workbench, context.pop("case2_path"))
        if "designs" in context:
            designs = {}
            for entry in context.pop("designs"):
                limit, sep, path = entry.partition("=")
                if not sep:
                    raise ArgumentError("Expected LIMIT=PATH", details={"design": entry})
                designs[float(limit)] = load_design(workbench, path)
            context["designs"] = designs
        if not context.get("speeds"):
            context.pop("speeds", None)
        if overrides.get("oloc.sigma_max_mpa"):
            context["sigma_max_mpa"] = float(overrides["oloc.sigma_max_mpa"])
        frames = study_class(workbench).run(context)
        write_frames(run_dir, frames)
        return {"study": study_class.get_name()}

    command = run_command(name)(body)
    for option in reversed(extra_options):
        command = option(command)
    command = scenario_options(command)
    command.__doc__ = help_text
    return click.command(name)(command)


DESIGN_OPTION = click.option("--design", "design_path", type=click.Path(), default=None, help="Design JSON (default baseline).")
SPEED_OPTION = click.option("--speed", "speeds", type=float, multiple=True, help="Wind speeds [m/s] (default 3..25).")
DURATION_OPTION = click.option("--duration", type=float, default=None, help="Horizon per point [s].")
BIN_OPTION = click.option("--bin", "wind_speed", type=float, default=None, help="Mean wind speed [m/s].")

power_curve = study_command(
    "power-curve",
    "Steady-wind power curve (mean generator power per wind speed).",
    (DESIGN_OPTION, SPEED_OPTION, DURATION_OPTION, click.option("--varied", is_flag=True, help="Add the fluctuating-wind overlay.")),
)
cross_study = study_command(
    "cross-study",
    "Power curves and AEP for every pair of design and operating stress limit.",
    (
        click.option("--design", "designs", multiple=True, help="LIMIT=PATH design for a stress limit (repeatable)."),
        SPEED_OPTION,
        DURATION_OPTION,
    ),
)
mass_study = study_command(
    "mass-study",
    "Light and heavy tower compared for one bin, with the light tower's controls replayed on the heavy one.",
    (
        DESIGN_OPTION,
        click.option("--case2", "case2_path", type=click.Path(), default=None, help="Heavy design JSON."),
        click.option("--thickness-scale", type=float, default=None, help="Wall thickness factor of the heavy tower."),
        BIN_OPTION,
    ),
)
fatigue = study_command(
    "fatigue",
    "Tower strength that reaches the design lifetime, from a stress file or a waves-off/waves-on pair.",
    (
        DESIGN_OPTION,
        click.option("--stress-series", type=click.Path(), default=None, help="CSV with t and stress columns."),
        click.option("--column", default=None, help="Stress column of the CSV."),
        BIN_OPTION,
    ),
)

cli.add_command(simulate)
cli.add_command(oloc)
cli.add_command(ccd)
cli.add_command(sensitivity)
cli.add_command(train_mooring)
cli.add_command(power_curve)
cli.add_command(cross_study)
cli.add_command(mass_study)
cli.add_command(fatigue)


def run():
    cli()


if __name__ == "__main__":
    run()
