from typing import Any, Dict

import pandas as pd

from fowtccd.analysis.cases import wave_study
from fowtccd.analysis.fatigue import FatigueSpec, read_stress_series, rainflow, strength_table
from fowtccd.ccd.design import PlantDesign
from fowtccd.studies.registry import Study, StudyRegistry


@StudyRegistry.register_study
class FatigueStudy(Study):
    """Required tower strength from a stress history file, or from a waves-off/waves-on pair of solves."""

    def run(self, context: Dict[str, Any]) -> Dict[str, pd.DataFrame]:
        config = self.settings.fatigue
        spec = FatigueSpec.from_config(config)
        path = context.get("stress_series") or self.settings.resolve(config.stress_series)
        if path:
            t, stress = read_stress_series(path, context.get("column"))
            self.log_info(f"Fatigue from {path}: {len(t)} samples")
            return {"fatigue": strength_table({"series": stress}, spec, t), "cycles": rainflow(stress)}

        design = context.get("design") or PlantDesign.baseline(self.workbench.params)
        u_bar = float(context.get("wind_speed", config.wind_speed))
        frames = wave_study(self.workbench, design, u_bar, spec, logger=self.logger)
        self.log_info(f"Wave study at {u_bar:g} m/s done")
        return frames
