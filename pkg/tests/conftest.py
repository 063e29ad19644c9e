import os
import textwrap

import numpy as np
import pytest

from fowtccd.aero.blade import BladeDesign, blade_geometry
from fowtccd.aero.polars import load_polars
from fowtccd.aero.surface import build_coefficient_surface
from fowtccd.model.parameters import load_plant_parameters
from fowtccd.model.plant import build_plant_model
from fowtccd.mooring.catenary import LineProperties
from fowtccd.mooring.surrogate import train_surrogate

COARSE_TSR = np.arange(1.0, 15.0 + 1e-9, 0.5)
COARSE_PITCH = np.arange(0.0, 40.0 + 1e-9, 2.0)


@pytest.fixture(scope="session", autouse=True)
def log_directory(tmp_path_factory):
    """Keep the workbench log files out of the source tree."""
    directory = tmp_path_factory.mktemp("logs")
    previous = os.environ.get("LOG_DIRECTORY")
    os.environ["LOG_DIRECTORY"] = str(directory)
    yield directory
    if previous is None:
        os.environ.pop("LOG_DIRECTORY", None)
    else:
        os.environ["LOG_DIRECTORY"] = previous


@pytest.fixture(scope="session")
def params():
    return load_plant_parameters()


@pytest.fixture(scope="session")
def line(params):
    return LineProperties.from_parameters(params.mooring)


@pytest.fixture(scope="session")
def mooring_domain(params):
    domain = params.mooring.surrogate["domain"]
    return tuple(domain["l"]), tuple(domain["h"])


@pytest.fixture(scope="session")
def small_surrogate(line, mooring_domain):
    """Quickly trained line model; accurate enough for the dynamics, not for accuracy checks."""
    return train_surrogate(
        line,
        mooring_domain,
        training_samples=300,
        validation_samples=100,
        hidden=(8,),
        seed=0,
        max_relative_error=1.0,
    )


@pytest.fixture(scope="session")
def polars(params):
    return load_polars(names=set(params.blade.airfoils))


@pytest.fixture(scope="session")
def baseline_geometry(params):
    return blade_geometry(BladeDesign.baseline(params.blade), params.blade)


@pytest.fixture(scope="session")
def coarse_surface(params, polars, baseline_geometry):
    rotor = params.rotor
    return build_coefficient_surface(
        baseline_geometry,
        polars,
        rotor.blades,
        rotor.radius,
        rotor.hub_radius,
        tsr_grid=COARSE_TSR,
        pitch_grid=COARSE_PITCH,
    )


@pytest.fixture(scope="session")
def hydrostatic_plant(params):
    """Rigid spar floating in still water: gravity and hydrostatics only."""
    return build_plant_model(params, components={"hs"})


@pytest.fixture(scope="session")
def plant(params, coarse_surface, small_surrogate):
    return build_plant_model(params, surface=coarse_surface, surrogate=small_surrogate)


@pytest.fixture
def scenario_file(tmp_path):
    """Write a scenario INI; keyword sections override the light defaults used by the tests."""

    def _write(components="hs", **sections):
        body = {
            "model": {"components": components},
            "output": {"directory": str(tmp_path / "runs")},
            "oloc": {"t_f": "20.0", "segments": "4"},
            "ccd": {"bins": "3", "population": "4", "generations": "1"},
        }
        for name, values in sections.items():
            body.setdefault(name, {}).update({k: str(v) for k, v in values.items()})
        text = "\n".join(
            f"[{name}]\n" + "\n".join(f"{k} = {v}" for k, v in values.items()) + "\n" for name, values in body.items()
        )
        path = tmp_path / "scenario.ini"
        path.write_text(textwrap.dedent(text))
        return str(path)

    return _write
