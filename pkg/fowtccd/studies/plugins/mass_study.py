from typing import Any, Dict

import pandas as pd

from fowtccd.analysis.cases import heavier_tower, mass_comparison
from fowtccd.ccd.design import PlantDesign
from fowtccd.studies.registry import Study, StudyRegistry


@StudyRegistry.register_study
class MassStudy(Study):
    """Light and heavy tower solved for one bin, plus the light tower's controls replayed on the heavy one."""

    def run(self, context: Dict[str, Any]) -> Dict[str, pd.DataFrame]:
        params = self.workbench.params
        case1 = context.get("design") or PlantDesign.baseline(params)
        case2 = context.get("case2") or heavier_tower(case1, params, float(context.get("thickness_scale", 1.5)))
        u_bar = float(context.get("wind_speed", self.settings.fatigue.wind_speed))
        frames = mass_comparison(self.workbench, case1, case2, u_bar, logger=self.logger)
        self.log_info(f"Mass comparison at {u_bar:g} m/s done")
        return frames
