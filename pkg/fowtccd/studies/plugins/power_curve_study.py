from functools import partial
from typing import Any, Dict

import pandas as pd

from fowtccd.analysis.power import CURVE_SPEEDS, curve_aep, power_curve
from fowtccd.ccd.design import PlantDesign
from fowtccd.ccd.runner import population_map
from fowtccd.studies.registry import Study, StudyRegistry


@StudyRegistry.register_study
class PowerCurveStudy(Study):
    """Steady-wind power curve of one design, optionally with the varied-wind overlay."""

    def run(self, context: Dict[str, Any]) -> Dict[str, pd.DataFrame]:
        workbench = self.workbench
        design = context.get("design") or PlantDesign.baseline(workbench.params)
        speeds = context.get("speeds", CURVE_SPEEDS)
        duration = float(context.get("duration", self.settings.oloc.power_curve_duration))
        sigma = context.get("sigma_max_mpa")
        plant = workbench.plant(design.tower, design.blade)
        waves = workbench.waves(plant, duration=duration)

        frames = {}
        with population_map(self.settings.ccd.workers) as map_fn:
            frames["power_curve"] = power_curve(
                plant, self.settings.oloc, speeds, sigma, duration=duration, waves=waves, map_fn=map_fn
            )
            if context.get("varied", False):
                frames["power_curve_varied"] = power_curve(
                    plant,
                    self.settings.oloc,
                    speeds,
                    sigma,
                    duration=duration,
                    wind_factory=partial(workbench.wind, duration=duration),
                    waves=waves,
                    map_fn=map_fn,
                )

        flagged = int(frames["power_curve"]["flagged"].sum())
        if flagged:
            self.log_warning(f"{flagged} power curve points flagged")
        bins = workbench.bins()
        hub = partial(workbench.hub_wind, tower_length=design.tower.l)
        frames["aep"] = pd.DataFrame(
            [{"curve": name, "AEP": curve_aep(curve, bins, hub)} for name, curve in frames.items()]
        )
        self.log_info(f"Power curve over {len(speeds)} speeds done")
        return frames
