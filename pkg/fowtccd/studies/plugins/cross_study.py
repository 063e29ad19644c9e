from typing import Any, Dict

import pandas as pd

from fowtccd.analysis.power import CURVE_SPEEDS, cross_constraint_study
from fowtccd.ccd.design import PlantDesign
from fowtccd.ccd.runner import population_map
from fowtccd.studies.registry import Study, StudyRegistry


@StudyRegistry.register_study
class CrossStudy(Study):
    """Power curves of plants designed for one stress limit and operated under another."""

    def run(self, context: Dict[str, Any]) -> Dict[str, pd.DataFrame]:
        workbench = self.workbench
        limits = tuple(float(v) for v in context.get("limits", (45.0, 90.0)))
        designs: Dict[float, PlantDesign] = context.get("designs") or {}
        plants = {}
        for limit in limits:
            design = designs.get(limit) or PlantDesign.baseline(workbench.params)
            plants[limit] = workbench.plant(design.tower, design.blade)

        with population_map(self.settings.ccd.workers) as map_fn:
            frames = cross_constraint_study(
                plants,
                self.settings.oloc,
                context.get("speeds", CURVE_SPEEDS),
                simulate_limits=limits,
                bins=workbench.bins(),
                hub_wind=lambda plant, u: workbench.hub_wind(u, plant.tower.l),
                duration=float(context.get("duration", self.settings.oloc.power_curve_duration)),
                map_fn=map_fn,
            )
        self.log_info(f"Cross study over limits {limits} done")
        return frames
