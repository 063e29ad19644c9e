import os
import glob
import importlib.util
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Type

import pandas as pd

from fowtccd.mixins.logger import LoggerMixin

DEFAULT_PLUGIN_DIR = os.path.join(os.path.dirname(__file__), "plugins")


class Study(ABC, LoggerMixin):
    """Base class for the analysis studies the command line runs."""

    def __init__(self, workbench, log_file="studies.log"):
        super().__init__(log_file)
        self.workbench = workbench

    @property
    def settings(self):
        return self.workbench.settings

    @abstractmethod
    def run(self, context: Dict[str, Any]) -> Dict[str, pd.DataFrame]:
        """Run the study; returns the tables to write, keyed by file stem."""
        pass

    @classmethod
    def get_name(cls) -> str:
        """Return the study name for registration."""
        return cls.__name__.lower().replace("study", "")


class StudyRegistry:
    """Registry for study classes."""

    _studies: Dict[str, Type[Study]] = {}

    @classmethod
    def register_study(cls, study_class: Type[Study]):
        """Register a study class."""
        cls._studies[study_class.get_name()] = study_class
        return study_class

    @classmethod
    def get_study(cls, name: str) -> Optional[Type[Study]]:
        """Get a study class by name; dashes and a study suffix are ignored (cross-study == cross)."""
        name = name.replace("-", "").replace("_", "").lower().replace("study", "")
        return cls._studies.get(name)

    @classmethod
    def names(cls) -> List[str]:
        return sorted(cls._studies)

    @classmethod
    def load_plugins(cls, plugin_dir: str = DEFAULT_PLUGIN_DIR):
        """Load all plugins from the given directory."""
        if not os.path.exists(plugin_dir):
            return

        for plugin_file in sorted(glob.glob(os.path.join(plugin_dir, "*.py"))):
            module_name = os.path.basename(plugin_file)[:-3]
            if module_name.startswith("_"):
                continue
            spec = importlib.util.spec_from_file_location(f"fowtccd_study_{module_name}", plugin_file)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
