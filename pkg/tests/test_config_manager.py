"""
Tests for the configuration singleton and logger setup.
"""

import json
import logging

import pytest

from src.utils.config_manager import ConfigManager, get_config
from src.utils.logger_setup import LoggerSetup, get_logger


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({
        "logging": {"level": "WARNING", "log_file": str(tmp_path / "logs" / "test.log")},
        "fft": {"workers": 2},
        "run_defaults": {"n": 16},
        "probes": {"ceiling": 50.0, "baseline_file": str(tmp_path / "b.json")},
        "blowup": {"trace_threshold": 1e4},
    }))
    return path


class TestConfigManager:
    """Lookup, singleton behaviour and environment overrides."""

    def test_repository_config(self, fresh_config):
        config = ConfigManager()
        assert config.get("run_defaults.n") == 32
        assert config.get_blowup_threshold() == pytest.approx(1e6)
        assert config.get("nonexistent.key", []) == []

    def test_explicit_path(self, fresh_config, config_file):
        config = ConfigManager(config_file)
        assert config.get_fft_workers() == 2
        assert config.get_run_defaults() == {"n": 16}
        assert config.get_probe_ceiling() == 50.0
        assert config.get_blowup_threshold() == 1e4
        assert config.get_probe_baseline_file().name == "b.json"

    def test_singleton(self, fresh_config, config_file):
        first = ConfigManager(config_file)
        assert ConfigManager() is first
        assert get_config("fft.workers") == 2

    def test_env_path(self, fresh_config, config_file, monkeypatch):
        monkeypatch.setenv("PTT_CONFIG", str(config_file))
        assert ConfigManager().get_fft_workers() == 2

    def test_env_log_level(self, fresh_config, config_file, monkeypatch):
        monkeypatch.setenv("PTT_LOG_LEVEL", "DEBUG")
        assert ConfigManager(config_file).get_logging_level() == "DEBUG"

    def test_missing_file_gives_defaults(self, fresh_config, tmp_path):
        config = ConfigManager(tmp_path / "absent.json")
        assert config.get_all() == {}
        assert config.get_probe_ceiling() == 1000.0
        assert config.get_logging_format("file").startswith("%(asctime)s")

    def test_invalid_json(self, fresh_config, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{")
        with pytest.raises(json.JSONDecodeError):
            ConfigManager(path)

    def test_reload(self, fresh_config, config_file):
        config = ConfigManager(config_file)
        config_file.write_text(json.dumps({"fft": {"workers": 4}}))
        config.reload()
        assert config.get_fft_workers() == 4
        assert json.loads(config.dump()) == {"fft": {"workers": 4}}


class TestLoggerSetup:
    """Handlers follow the configured level and file."""

    def test_console_level_and_file(self, fresh_config, config_file, tmp_path):
        ConfigManager(config_file)
        logger = LoggerSetup.setup("PTTSimTest")
        levels = {type(h).__name__: h.level for h in logger.handlers}
        assert levels["StreamHandler"] == logging.WARNING
        assert levels["RotatingFileHandler"] == logging.DEBUG
        assert (tmp_path / "logs").is_dir()

    def test_cached(self, fresh_config):
        assert get_logger("PTTSimCached") is get_logger("PTTSimCached")
