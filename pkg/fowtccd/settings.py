import configparser
import os
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from fowtccd.errors import ScenarioError

DEFAULT_SCENARIO_FILE = os.path.join(os.path.dirname(__file__), "config", "scenario.ini")
COMPONENT_TAGS = ("hs", "a", "moor", "hd")


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.replace(";", ",").split(",") if item.strip()]
    return value


class ModelConfig(BaseModel):
    parameters_path: Optional[str] = None
    components: List[str] = Field(default_factory=lambda: list(COMPONENT_TAGS))

    @field_validator("components", mode="before")
    def parse_components(cls, value):
        value = _split_list(value)
        unknown = [v for v in value if v not in COMPONENT_TAGS]
        if unknown:
            raise ValueError(f"unknown load components {unknown}; expected a subset of {COMPONENT_TAGS}")
        return value


class WindConfig(BaseModel):
    weibull_k: float = Field(2.0, gt=0)
    weibull_c: float = Field(13.44, gt=0)
    start: float = 3.0
    stop: float = 25.0
    step: float = Field(1.0, gt=0)
    shear_exponent: float = 0.2
    shear_base: float = 12.4
    shear_reference_length: float = Field(76.0, gt=0)
    fluctuation: float = Field(0.08, ge=0, lt=1)
    components: int = Field(6, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def check_range(self):
        if self.stop < self.start:
            raise ValueError("wind range stop must not be below start")
        return self


class WaveConfig(BaseModel):
    enabled: bool = False
    H_s: float = Field(6.0, ge=0)
    T_p: float = Field(10.0, gt=0)
    components: int = Field(50, ge=1)
    seed: int = 0


class OlocConfig(BaseModel):
    t_i: float = 0.0
    t_f: float = 100.0
    segments: int = Field(50, ge=1)
    tol: float = Field(1e-6, gt=0)
    constr_viol_tol: float = Field(1e-6, gt=0)
    max_iter: int = Field(500, ge=1)
    torque_rate_weight: float = Field(1e-7, ge=0)
    pitch_rate_weight: float = Field(1e7, ge=0)
    sigma_max_mpa: float = Field(45.0, gt=0)
    trim_margin: float = Field(0.05, ge=0, lt=1)
    feasibility_tol: float = Field(1e-5, gt=0)
    power_curve_duration: float = Field(600.0, gt=0)

    @model_validator(mode="after")
    def check_horizon(self):
        if not self.t_f > self.t_i:
            raise ValueError("t_f must be greater than t_i")
        return self

    @property
    def sigma_max(self) -> float:
        return 1e6 * self.sigma_max_mpa


class CcdConfig(BaseModel):
    mode: str = "tower"
    population: int = Field(8, ge=4)
    generations: int = Field(15, ge=0)
    sigma0: float = Field(0.2, gt=0)
    seed: int = 0
    bins: int = Field(5, ge=1)
    workers: int = Field(1, ge=1)
    penalty: float = Field(1e15, gt=0)
    perturbation: float = Field(0.05, gt=0, lt=1)

    @field_validator("mode", mode="before")
    def parse_mode(cls, value):
        value = str(value).strip().lower().replace("-", "_")
        aliases = {"tower_only": "tower", "tower_and_blades": "tower_blades", "t&b": "tower_blades"}
        value = aliases.get(value, value)
        if value not in ("tower", "tower_blades"):
            raise ValueError("mode must be one of: tower, tower_blades")
        return value


class FatigueConfig(BaseModel):
    exponent: float = Field(4.0, gt=0)
    lifetime_years: float = Field(20.0, gt=0)
    reference_cycles: float = Field(2e6, gt=0)
    stress_series: Optional[str] = None
    mean_stress: str = "none"
    availability: float = Field(1.0, gt=0, le=1)
    wind_speed: float = Field(14.0, gt=0)

    @field_validator("mean_stress")
    def validate_mean_stress(cls, v):
        if v not in ("none", "goodman"):
            raise ValueError("mean_stress must be one of: none, goodman")
        return v


class OutputConfig(BaseModel):
    directory: str = "runs"


class MooringConfig(BaseModel):
    surrogate_path: Optional[str] = None


class AeroConfig(BaseModel):
    surface_cache: Optional[str] = None
    tsr_step: float = Field(0.25, gt=0)
    pitch_step: float = Field(1.0, gt=0)


SECTION_MODELS = {
    "model": ModelConfig,
    "wind": WindConfig,
    "wave": WaveConfig,
    "oloc": OlocConfig,
    "ccd": CcdConfig,
    "fatigue": FatigueConfig,
    "output": OutputConfig,
    "mooring": MooringConfig,
    "aero": AeroConfig,
}


class ScenarioSettings:
    """Scenario read from an INI file and validated section by section."""

    DEFAULT_SCENARIO_PATH = os.getenv("FOWTCCD_SCENARIO", DEFAULT_SCENARIO_FILE)

    def __init__(self, scenario_path: str = None, overrides: Optional[Dict[str, str]] = None):
        self.scenario_path = scenario_path or self.DEFAULT_SCENARIO_PATH
        self.config = self.load_config(self.scenario_path)
        for dotted, value in (overrides or {}).items():
            section, key = self.split_key(dotted)
            if not self.config.has_section(section):
                self.config.add_section(section)
            self.config.set(section, key, str(value))

        self.model = self.section("model")
        self.wind = self.section("wind")
        self.wave = self.section("wave")
        self.oloc = self.section("oloc")
        self.ccd = self.section("ccd")
        self.fatigue = self.section("fatigue")
        self.output = self.section("output")
        self.mooring = self.section("mooring")
        self.aero = self.section("aero")

    @staticmethod
    def split_key(dotted: str) -> Tuple[str, str]:
        section, _, key = dotted.partition(".")
        if not section or not key:
            raise ScenarioError(f"Override must look like section.key=value: {dotted}", details={"override": dotted})
        if section not in SECTION_MODELS:
            raise ScenarioError(f"Unknown scenario section [{section}]", details={"override": dotted})
        return section, key

    def get(self, section: str, key: str, required: bool = False, default=None):
        """Retrieve a configuration value with optional defaults."""
        if not self.config.has_section(section):
            if required:
                raise ScenarioError(f"Missing section [{section}] in scenario file.", details={"path": self.scenario_path})
            return default
        value = self.config.get(section, key, fallback=default)
        if not value:
            if required:
                raise ScenarioError(f"Missing {section}.{key} in scenario file.", details={"path": self.scenario_path})
            return default
        return value.strip()

    def section(self, name: str):
        raw = dict(self.config.items(name)) if self.config.has_section(name) else {}
        raw = {k: v.strip() for k, v in raw.items() if v is not None and v.strip() != ""}
        try:
            return SECTION_MODELS[name](**raw)
        except ValidationError as e:
            raise ScenarioError(
                f"Invalid [{name}] section in {self.scenario_path}",
                details={"section": name, "errors": [err["msg"] for err in e.errors()]},
            ) from e

    def load_config(self, scenario_path, strict=True):
        """Load the scenario file if it exists."""
        config = configparser.ConfigParser()
        config.optionxform = str  # keys such as H_s are case sensitive
        if not os.path.exists(scenario_path):
            if strict:
                raise ScenarioError(f"Scenario file not found: {scenario_path}", details={"path": scenario_path})
            return config
        try:
            config.read(scenario_path)
        except configparser.Error as e:
            raise ScenarioError(f"Unreadable scenario file {scenario_path}: {e}", details={"path": scenario_path}) from e
        return config

    def write(self, path: str) -> str:
        with open(path, "w") as f:
            self.config.write(f)
        return path

    def resolve(self, path: Optional[str]) -> Optional[str]:
        """Paths in the scenario are relative to the scenario file."""
        if not path or os.path.isabs(path):
            return path
        return os.path.join(os.path.dirname(os.path.abspath(self.scenario_path)), path)

    def __repr__(self):
        return (
            f"ScenarioSettings(\n"
            f"  scenario_path={self.scenario_path},\n"
            f"  components={self.model.components},\n"
            f"  waves={self.wave.enabled},\n"
            f"  sigma_max_mpa={self.oloc.sigma_max_mpa},\n"
            f"  segments={self.oloc.segments},\n"
            f"  ccd_mode={self.ccd.mode},\n"
            f"  output={self.output.directory},\n"
            f")"
        )
