"""
Tests for run configuration, initial data, scenario checks and the run loop.
"""

import json
from dataclasses import replace

import numpy as np
import pytest

from src import experiment_runner
from src.diagnostics import HISTORY_COLUMNS, energy_e0
from src.experiment_runner import (
    ConfigError,
    CsvLog,
    RunConfig,
    RunIOError,
    build_initial_data,
    check_blowup_time,
    check_bounded_growth,
    check_special_solution,
    default_particles,
    initial_trace_tau,
    load_final_state,
    run,
    run_from_file,
    save_final_state,
)
from src.littlewood_paley import build_bank
from src.spectral_core import Grid, divergence
from src.time_integrator import BlowUpReport
from src.verification import random_state


def quick_config(tmp_path, **overrides):
    """Tiny special-solution run on n = 8."""
    data = {"scenario": "special_solution", "n": 8, "cutoff_N": 1, "t_end": 0.05,
            "output_dir": str(tmp_path / "run")}
    data.update(overrides)
    return RunConfig.from_dict(data)


class TestRunConfig:
    """Parsing and validation."""

    def test_defaults_layered(self):
        config = RunConfig.from_dict({"scenario": "special_solution"},
                                     defaults={"n": 16, "c0": 2.0})
        assert config.n == 16 and config.c0 == 2.0
        assert config.scheme == "if_rk2"

    @pytest.mark.parametrize("data", [
        {"scenario": "turbulence"},
        {"n": 7},
        {"n": 10.5},
        {"p": 5.0},
        {"t_end": 0.0},
        {"sample_every": 0},
        {"scheme": "euler"},
        {"cfl_safety": 2.0},
        {"model": {"a": 0.5}},
        {"model": {"viscosity": 1.0}},
        {"particle_method": "nearest"},
        {"particles": [[0.0, 0.0]]},
        {"scenario": "small_data", "delta0": 0.0},
        {"scenario": "negative_trace_blowup", "trace_min": 0.5},
        {"scenario": "custom", "modes": [{"field": "u", "component": 0, "k": [20, 0, 0]}]},
        {"scenario": "custom", "modes": [{"field": "sigma", "component": 1, "k": [1, 0, 0]}]},
        {"scenario": "custom", "modes": [{"field": "p", "k": [1, 0, 0]}]},
        {"scenario": "custom", "normalize_energy": True},
    ])
    def test_rejected(self, data):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(data, defaults={})

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="resolution"):
            RunConfig.from_dict({"resolution": 64}, defaults={})

    def test_from_file_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.from_file(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            RunConfig.from_file(bad)

    def test_blowup_expected(self):
        assert RunConfig(scenario="negative_trace_blowup").blowup_expected
        assert not RunConfig(scenario="small_data").blowup_expected
        assert RunConfig(scenario="custom", expect_blowup=True).blowup_expected

    def test_stepper_and_params(self):
        config = RunConfig.from_dict({"scheme": "if_rk4", "c0": 3.0, "model": {"mu": 0.5}},
                                     defaults={})
        assert config.stepper().scheme == "if_rk4"
        assert config.model_params().c0 == 3.0
        assert config.model_params().mu == 0.5


class TestInitialData:
    """Scenario initial conditions."""

    def test_special_solution_is_zero(self):
        u0, sigma0 = build_initial_data(RunConfig(scenario="special_solution", n=8))
        assert u0.max_abs() == 0.0 and sigma0.max_abs() == 0.0

    def test_small_data_energy(self):
        config = RunConfig(scenario="small_data", n=16, delta0=1e-3, p=3.0, seed=4)
        grid = Grid(16)
        bank = build_bank(grid, config.cutoff_N)
        u0, sigma0 = build_initial_data(config, grid, bank)
        assert energy_e0(bank, u0, sigma0, 3.0) == pytest.approx(1e-3, rel=1e-12)
        assert u0.solenoidal
        assert divergence(u0).max_abs() <= 1e-12 * u0.max_abs()

    def test_small_data_seeded(self):
        config = RunConfig(scenario="small_data", n=8, cutoff_N=1, seed=9)
        a, _ = build_initial_data(config)
        b, _ = build_initial_data(config)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)

    def test_trace_profile(self):
        grid = Grid(16)
        config = RunConfig(scenario="negative_trace_blowup", n=16)
        trace = initial_trace_tau(config, grid)
        assert trace.min() == pytest.approx(-1.0)
        assert trace[8, 8, 8] == pytest.approx(-1.0)
        assert trace.max() == pytest.approx(-1.0 + 0.25 * 6.0)

    def test_negative_trace_sigma(self):
        grid = Grid(16)
        config = RunConfig(scenario="negative_trace_blowup", n=16, c0=1.0)
        u0, sigma0 = build_initial_data(config, grid)
        tr_tau = sigma0.trace().to_physical() + config.c0
        np.testing.assert_allclose(tr_tau, initial_trace_tau(config, grid), atol=1e-12)
        deviatoric = sigma0.full_physical()[0, 1]
        assert np.max(np.abs(deviatoric)) <= 1e-14
        assert u0.max_abs() > 0.0

    def test_custom_modes(self):
        config = RunConfig.from_dict({
            "scenario": "custom", "n": 16,
            "modes": [{"field": "u", "component": 0, "k": [0, 1, 0], "amplitude": 0.5},
                      {"field": "sigma", "component": [0, 1], "k": [0, 0, 2], "phase": 0.3}],
        }, defaults={})
        grid = Grid(16)
        x = grid.physical_coordinates()
        u0, sigma0 = build_initial_data(config, grid)
        np.testing.assert_allclose(u0.to_physical()[0], 0.5 * np.cos(x[1]), atol=1e-12)
        S = sigma0.full_physical()
        np.testing.assert_allclose(S[0, 1], np.cos(2 * x[2] + 0.3), atol=1e-12)
        np.testing.assert_allclose(S[1, 0], S[0, 1])

    def test_custom_normalized(self):
        config = RunConfig.from_dict({
            "scenario": "custom", "n": 16, "normalize_energy": True, "delta0": 2e-3,
            "modes": [{"field": "u", "component": 2, "k": [1, 1, 0]}],
        }, defaults={})
        grid = Grid(16)
        bank = build_bank(grid, config.cutoff_N)
        u0, sigma0 = build_initial_data(config, grid, bank)
        assert energy_e0(bank, u0, sigma0, config.p) == pytest.approx(2e-3, rel=1e-12)

    def test_default_particles(self):
        points = default_particles(RunConfig())
        assert points[0] == pytest.approx([np.pi] * 3)
        assert default_particles(RunConfig(particles=[[1, 2, 3]])) == [[1.0, 2.0, 3.0]]


class TestOutput:
    """CSV and state persistence."""

    def test_csv_log(self, tmp_path):
        path = tmp_path / "log.csv"
        with CsvLog(path, ["t", "value"]) as log:
            log.write({"t": 0.1, "value": 2})
            log.write_values([0.2, 1.0 / 3.0])
        lines = path.read_text().splitlines()
        assert lines[0] == "t,value"
        assert lines[1] == "0.10000000000000001,2"
        assert float(lines[2].split(",")[1]) == 1.0 / 3.0

    def test_final_state_file(self, tmp_path, grid8, rng):
        state = random_state(grid8, rng, t=0.7)
        path = tmp_path / "state.npz"
        save_final_state(path, state)
        back = load_final_state(path)
        np.testing.assert_array_equal(back.sigma.coeffs, state.sigma.coeffs)
        assert back.t == 0.7 and back.grid.n == 8


class TestScenarioChecks:
    """Verdicts from histories and blow-up reports."""

    def test_special_solution_check(self):
        assert check_special_solution([{"u_linf": 0.0, "sigma_linf": 0.0}])
        assert not check_special_solution([{"u_linf": 1e-6, "sigma_linf": 0.0}])

    def test_blowup_window(self):
        config = RunConfig(scenario="negative_trace_blowup", trace_min=-2.0)
        assert check_blowup_time(config, BlowUpReport(0.52, "trace threshold exceeded", 1e7))
        assert not check_blowup_time(config, BlowUpReport(0.8, "trace threshold exceeded", 1e7))
        assert not check_blowup_time(config, None)

    def test_bounded_growth(self):
        rows = [{"t": 0.0, "E_total": 1.0, "u_low_b12": 1.0},
                {"t": 1.0, "E_total": 2.0, "u_low_b12": 0.5},
                {"t": 5.0, "E_total": 3.0, "u_low_b12": 0.1}]
        assert check_bounded_growth(rows)
        rows[-1]["u_low_b12"] = 0.6
        assert not check_bounded_growth(rows)
        short = check_bounded_growth(rows[:1])
        assert short and short.data["skipped"]


class TestRun:
    """End-to-end runs on small grids."""

    def test_special_solution_run(self, tmp_path):
        artifacts = run(quick_config(tmp_path))
        assert artifacts.exit_code == 0
        assert artifacts.passed
        for path in (artifacts.history_path, artifacts.particles_path, artifacts.manifest_path,
                     artifacts.report_path, artifacts.final_state_path):
            assert path.exists()
        header = artifacts.history_path.read_text().splitlines()[0]
        assert header == ",".join(HISTORY_COLUMNS)
        report = json.loads(artifacts.report_path.read_text())
        assert report["t_final"] == pytest.approx(0.05)
        assert report["blowup"] is None
        manifest = json.loads(artifacts.manifest_path.read_text())
        assert manifest["shells"]["cutoff_N"] == 1

    def test_deterministic_history(self, tmp_path):
        config = quick_config(tmp_path, scenario="small_data", delta0=1e-2, seed=5)
        a = run(replace(config, output_dir=str(tmp_path / "a")))
        b = run(replace(config, output_dir=str(tmp_path / "b")))
        assert a.history_path.read_bytes() == b.history_path.read_bytes()
        assert a.particles_path.read_bytes() == b.particles_path.read_bytes()

    def test_unexpected_blowup_exit_code(self, tmp_path):
        config = quick_config(tmp_path, scenario="negative_trace_blowup", expect_blowup=False,
                              trace_min=-40.0, t_end=0.2, trace_threshold=1e3)
        artifacts = run(config)
        assert artifacts.blowup is not None
        assert artifacts.exit_code == 3

    def test_output_dir_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(RunIOError) as info:
            run(quick_config(tmp_path, output_dir=str(blocker / "run")))
        assert info.value.artifacts is not None

    def test_history_closed_when_particle_log_fails(self, tmp_path, monkeypatch):
        opened = []

        class RecordingCsvLog(CsvLog):
            def __init__(self, path, columns):
                super().__init__(path, columns)
                opened.append(self)

        monkeypatch.setattr(experiment_runner, "CsvLog", RecordingCsvLog)
        config = quick_config(tmp_path)
        (tmp_path / "run" / "particles.csv").mkdir(parents=True)
        with pytest.raises(RunIOError):
            run(config)
        assert [log.path.name for log in opened] == ["history.csv"]
        assert opened[0]._file.closed

    def test_run_from_file_overrides(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"scenario": "special_solution", "n": 8, "cutoff_N": 1,
                                    "t_end": 0.02}))
        artifacts = run_from_file(path, output_dir=tmp_path / "override", seed=3)
        assert artifacts.output_dir == tmp_path / "override"
        assert json.loads(artifacts.manifest_path.read_text())["config"]["seed"] == 3

    @pytest.mark.slow
    def test_negative_trace_blowup(self, tmp_path):
        config = RunConfig.from_file("config/blowup.example.json")
        artifacts = run(replace(config, output_dir=str(tmp_path / "blowup"), sample_every=5))
        assert artifacts.blowup is not None
        assert 0.9 <= artifacts.blowup.t <= 1.1
        assert artifacts.passed
        assert artifacts.exit_code == 0

    @pytest.mark.slow
    def test_small_data_stays_bounded(self, tmp_path):
        config = RunConfig.from_file("config/run.example.json")
        assert (config.n, config.t_end, config.delta0) == (32, 20.0, 1e-3)
        artifacts = run(replace(config, output_dir=str(tmp_path / "small")))
        assert artifacts.blowup is None
        assert artifacts.exit_code == 0
        growth = next(check for check in artifacts.checks if "E_1" in check.data)
        assert growth.success
        assert growth.data["E_end"] <= 10.0 * growth.data["E_1"]
        assert growth.data["u_low_end"] <= growth.data["u_low_1"]
        assert artifacts.history[-1]["t"] == pytest.approx(20.0)

    @pytest.mark.slow
    @pytest.mark.parametrize("c0", [1.0, 3.0])
    def test_special_solution_stays_exact(self, tmp_path, c0):
        config = RunConfig.from_dict({"scenario": "special_solution", "n": 32, "c0": c0,
                                      "t_end": 1.0, "output_dir": str(tmp_path / "special")})
        artifacts = run(config)
        assert artifacts.passed
        assert artifacts.history[-1]["t"] == pytest.approx(1.0)
        worst = max(row["u_linf"] + row["sigma_linf"] for row in artifacts.history)
        assert worst <= 1e-10
        assert artifacts.checks[0].data["max_perturbation"] == worst
