"""Lazily assembled resources shared by the commands: parameters, polars, surrogate and surfaces."""

import os
from typing import Dict, Optional

import numpy as np

from fowtccd.aero.blade import BladeDesign, blade_geometry
from fowtccd.aero.polars import load_polars
from fowtccd.aero.surface import cached_coefficient_surface
from fowtccd.environment.waves import WaveSpec, calm_sea, wave_field
from fowtccd.environment.wind import WindBinSet, representative_bins, shear_adjust, weibull_bins, wind_profile
from fowtccd.mixins.logger import LoggerMixin
from fowtccd.model.parameters import load_plant_parameters
from fowtccd.model.plant import PlantModel, build_plant_model
from fowtccd.mooring.catenary import LineProperties
from fowtccd.mooring.surrogate import load_surrogate, save_surrogate, train_surrogate
from fowtccd.settings import ScenarioSettings


class Workbench(LoggerMixin):
    def __init__(self, settings: ScenarioSettings, log_file: str = "fowtccd.log"):
        super().__init__(log_file)
        self.settings = settings
        self._params = None
        self._polars = None
        self._surrogate = None
        self._surfaces: Dict[tuple, object] = {}

    @property
    def params(self):
        if self._params is None:
            self._params = load_plant_parameters(self.settings.resolve(self.settings.model.parameters_path))
        return self._params

    @property
    def polars(self):
        if self._polars is None:
            self._polars = load_polars(names=set(self.params.blade.airfoils))
        return self._polars

    @property
    def surrogate(self):
        if "moor" not in self.settings.model.components:
            return None
        if self._surrogate is None:
            path = self.settings.resolve(self.settings.mooring.surrogate_path)
            if path and os.path.exists(path):
                self._surrogate = load_surrogate(path)
            else:
                self._surrogate = self.train_surrogate()
                if path:
                    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
                    save_surrogate(self._surrogate, path)
                    self.log_info(f"Mooring surrogate stored at {path}")
        return self._surrogate

    def train_surrogate(self, **overrides):
        config = dict(self.params.mooring.surrogate)
        config.update(overrides)
        domain = config["domain"]
        return train_surrogate(
            LineProperties.from_parameters(self.params.mooring),
            (tuple(domain["l"]), tuple(domain["h"])),
            training_samples=int(config["training_samples"]),
            validation_samples=int(config["validation_samples"]),
            hidden=tuple(config["hidden_layers"]),
            activation=config["activation"],
            seed=int(config["seed"]),
            max_relative_error=float(config["max_relative_error"]),
        )

    def surface(self, blade: Optional[BladeDesign] = None):
        if "a" not in self.settings.model.components:
            return None
        blade = blade or BladeDesign.baseline(self.params.blade)
        key = tuple(blade.as_vector().tolist())
        if key not in self._surfaces:
            aero = self.settings.aero
            rotor = self.params.rotor
            self._surfaces[key] = cached_coefficient_surface(
                self.settings.resolve(aero.surface_cache),
                blade_geometry(blade, self.params.blade),
                self.polars,
                rotor.blades,
                rotor.radius,
                rotor.hub_radius,
                tsr_grid=np.arange(1.0, 15.0 + 1e-9, aero.tsr_step),
                pitch_grid=np.arange(0.0, 40.0 + 1e-9, aero.pitch_step),
                logger=self.logger,
            )
        return self._surfaces[key]

    def plant(self, tower=None, blade: Optional[BladeDesign] = None) -> PlantModel:
        """Raises InvalidDesignError, InfeasiblePlantError or ModelError for unusable designs."""
        return build_plant_model(
            self.params,
            tower=tower,
            surface=self.surface(blade),
            surrogate=self.surrogate,
            blade=blade,
            components=self.settings.model.components,
        )

    def bins(self, count: Optional[int] = None) -> WindBinSet:
        wind = self.settings.wind
        bins = weibull_bins(wind.weibull_k, wind.weibull_c, wind.start, wind.stop, wind.step)
        return bins if count is None else representative_bins(bins, count)

    def hub_wind(self, u_bar: float, tower_length: float) -> float:
        wind = self.settings.wind
        return float(
            shear_adjust(u_bar, tower_length, z_base=wind.shear_base, l_baseline=wind.shear_reference_length, exponent=wind.shear_exponent)
        )

    def wind(self, u_hub: float, index: int = 0, duration: Optional[float] = None, steady: bool = False):
        wind = self.settings.wind
        duration = duration or self.settings.oloc.t_f - self.settings.oloc.t_i
        return wind_profile(
            u_hub,
            duration=duration,
            seed=wind.seed + index,
            amplitude=0.0 if steady else wind.fluctuation,
            components=wind.components,
        )

    def waves(self, plant: PlantModel, duration: Optional[float] = None, enabled: Optional[bool] = None):
        wave = self.settings.wave
        duration = duration or self.settings.oloc.t_f - self.settings.oloc.t_i
        enabled = wave.enabled if enabled is None else enabled
        if not enabled or not plant.has("hd"):
            return calm_sea(plant.wave_depth, duration)
        spec = WaveSpec(H_s=wave.H_s, T_p=wave.T_p, components=wave.components, seed=wave.seed)
        return wave_field(spec, duration, plant.wave_depth, plant.params.gravity)
