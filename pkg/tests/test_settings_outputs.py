import json
import logging
import os

import numpy as np
import pandas as pd
import pytest

from fowtccd.errors import ArgumentError, FowtCcdError, RootFindError, ScenarioError
from fowtccd.mixins.logger import LoggerMixin
from fowtccd.outputs import RunDirectory, error_record, read_frame, write_frame, write_json
from fowtccd.settings import DEFAULT_SCENARIO_FILE, ScenarioSettings


class Recorder(LoggerMixin):
    pass


class TestScenarioSettings:
    def test_packaged_defaults(self):
        settings = ScenarioSettings(DEFAULT_SCENARIO_FILE)
        assert settings.model.components == ["hs", "a", "moor", "hd"]
        assert settings.oloc.sigma_max == 45e6
        assert settings.ccd.mode == "tower"
        assert settings.ccd.penalty == 1e15
        assert not settings.wave.enabled
        assert settings.fatigue.mean_stress == "none"

    def test_file_values(self, scenario_file):
        settings = ScenarioSettings(scenario_file(components="hs, a"))
        assert settings.model.components == ["hs", "a"]
        assert settings.oloc.t_f == 20.0 and settings.oloc.segments == 4
        assert settings.ccd.bins == 3
        # sections missing from the file fall back to the model defaults
        assert settings.wind.weibull_c == 13.44

    def test_overrides_win(self, scenario_file):
        settings = ScenarioSettings(
            scenario_file(), {"oloc.segments": "10", "wave.enabled": "true", "ccd.mode": "tower-and-blades"}
        )
        assert settings.oloc.segments == 10
        assert settings.wave.enabled
        assert settings.ccd.mode == "tower_blades"

    @pytest.mark.parametrize("key", ["segments", "oloc.", "physics.gravity"])
    def test_bad_override_keys(self, scenario_file, key):
        with pytest.raises(ScenarioError):
            ScenarioSettings(scenario_file(), {key: "1"})

    @pytest.mark.parametrize(
        "override,section",
        [
            ({"oloc.segments": "0"}, "oloc"),
            ({"oloc.t_f": "-1"}, "oloc"),
            ({"model.components": "hs, sails"}, "model"),
            ({"ccd.mode": "blades"}, "ccd"),
            ({"fatigue.mean_stress": "gerber"}, "fatigue"),
            ({"wind.stop": "2"}, "wind"),
        ],
    )
    def test_invalid_values(self, scenario_file, override, section):
        with pytest.raises(ScenarioError) as info:
            ScenarioSettings(scenario_file(), override)
        assert info.value.details["section"] == section
        assert info.value.exit_code == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError):
            ScenarioSettings(str(tmp_path / "missing.ini"))

    def test_relative_paths_follow_the_scenario(self, scenario_file, tmp_path):
        settings = ScenarioSettings(scenario_file())
        assert settings.resolve("cache/s.txt") == os.path.join(str(tmp_path), "cache/s.txt")
        assert settings.resolve("/abs/s.txt") == "/abs/s.txt"
        assert settings.resolve(None) is None

    def test_written_copy_keeps_overrides(self, scenario_file, tmp_path):
        settings = ScenarioSettings(scenario_file(), {"oloc.sigma_max_mpa": "90"})
        copy = settings.write(str(tmp_path / "copy.ini"))
        assert ScenarioSettings(copy).oloc.sigma_max_mpa == 90.0


class TestErrors:
    def test_exit_codes(self):
        assert FowtCcdError("x").exit_code == 1
        assert ScenarioError("x").exit_code == 3
        assert ArgumentError("x").exit_code == 2
        assert isinstance(ArgumentError("x"), ValueError)

    def test_record(self):
        record = RootFindError("no trim", details={"u": 4.0}).to_record()
        assert record == {
            "status": "error",
            "exit_code": 1,
            "type": "RootFindError",
            "message": "no trim",
            "details": {"u": 4.0},
        }

    def test_record_of_foreign_exception(self):
        record = error_record(KeyError("E_g"), 1)
        assert record["type"] == "KeyError"
        assert record["details"] == {}


class TestRunDirectory:
    def test_layout_and_manifest(self, tmp_path):
        run_dir = RunDirectory(str(tmp_path), "oloc", stamp="20250101_000000")
        assert run_dir.path == tmp_path / "oloc-20250101_000000"
        run_dir.json("summary.json", {"P": np.float64(1.5), "ok": np.bool_(True), "n": np.int64(3)})
        run_dir.frame("trajectory.csv", pd.DataFrame({"t": [0.0, 1.0]}))
        # written once the command body has finished
        assert not (run_dir.path / "manifest.json").exists()
        run_dir.manifest(extra={"status": "optimal"})
        manifest = json.loads((run_dir.path / "manifest.json").read_text())
        assert manifest["command"] == "oloc"
        assert manifest["files"] == ["summary.json", "trajectory.csv"]
        assert manifest["status"] == "optimal"
        summary = json.loads((run_dir.path / "summary.json").read_text())
        assert summary == {"P": 1.5, "ok": True, "n": 3}

    def test_stamp_collision(self, tmp_path):
        first = RunDirectory(str(tmp_path), "ccd", stamp="s")
        second = RunDirectory(str(tmp_path), "ccd", stamp="s")
        assert first.path != second.path
        assert second.path.name == "ccd-s-2"

    def test_error_file(self, tmp_path):
        run_dir = RunDirectory(str(tmp_path), "ccd", stamp="s")
        record = run_dir.error(ArgumentError("bad bin", details={"bin": -1}), 2)
        stored = json.loads((run_dir.path / "error.json").read_text())
        assert stored == record
        assert stored["exit_code"] == 2 and stored["type"] == "ArgumentError"

    def test_frames_keep_full_precision(self, tmp_path):
        values = np.array([0.1 + 0.2, np.pi * 1e-9, 1.0 / 3.0, 5e6 * np.e])
        path = write_frame(pd.DataFrame({"x": values}), tmp_path / "x.csv")
        np.testing.assert_array_equal(read_frame(path)["x"].to_numpy(), values)

    def test_json_values(self, tmp_path):
        path = write_json({"a": np.array([1.0, np.nan]), "b": (np.int32(2),), "c": float("inf")}, tmp_path / "d.json")
        data = json.loads(open(path).read())
        assert data == {"a": [1.0, "nan"], "b": [2], "c": "inf"}


class TestLoggerMixin:
    def test_writes_under_the_log_directory(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LOG_DIRECTORY", str(tmp_path / "first"))
        recorder = Recorder("recorder.log")
        recorder.log_info("hello")
        for handler in recorder.logger.handlers:
            handler.flush()
        text = (tmp_path / "first" / "logs" / "recorder.log").read_text()
        assert "Recorder - INFO - hello" in text

    def test_handler_follows_directory_changes(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LOG_DIRECTORY", str(tmp_path / "a"))
        Recorder("recorder.log")
        monkeypatch.setenv("LOG_DIRECTORY", str(tmp_path / "b"))
        recorder = Recorder("recorder.log")
        handlers = [h for h in recorder.logger.handlers if isinstance(h, logging.FileHandler)]
        assert len(handlers) == 1
        assert handlers[0].baseFilename == str(tmp_path / "b" / "logs" / "recorder.log")

    def test_failure_carries_details(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LOG_DIRECTORY", str(tmp_path / "fail"))
        recorder = Recorder("recorder.log")
        try:
            raise RootFindError("no trim", details={"u": 4.0})
        except RootFindError as e:
            recorder.log_failure(e, "Bin 4 m/s failed")
        for handler in recorder.logger.handlers:
            handler.flush()
        text = (tmp_path / "fail" / "logs" / "recorder.log").read_text()
        assert "Bin 4 m/s failed: RootFindError: no trim {'u': 4.0}" in text
        assert "Traceback" in text
