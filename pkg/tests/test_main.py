"""
Tests for the ptt-sim command line.
"""

import json

import pytest

from src import __version__
from src.main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, build_parser, main


class TestParser:
    """Argument handling."""

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            build_parser().parse_args(["--version"])
        assert info.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_command_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_probe_ps_repeatable(self):
        args = build_parser().parse_args(["probe", "--estimate", "product", "--p", "2", "--p", "3"])
        assert args.p == [2.0, 3.0]


class TestCommands:
    """Exit codes of the subcommands."""

    def test_verify_operators(self, tmp_path, capsys):
        summary_path = tmp_path / "summary.json"
        assert main(["verify", "--suite", "operators", "--summary", str(summary_path)]) == EXIT_OK
        assert json.loads(summary_path.read_text())["passed"]
        assert '"suite": "operators"' in capsys.readouterr().out

    def test_run_special_solution(self, tmp_path, capsys):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"scenario": "special_solution", "n": 8, "cutoff_N": 1,
                                      "t_end": 0.02}))
        out = tmp_path / "out"
        assert main(["run", "--config", str(config), "--out", str(out)]) == EXIT_OK
        assert (out / "report.json").exists()
        assert json.loads(capsys.readouterr().out)["passed"]

    def test_run_bad_config(self, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"scenario": "special_solution", "n": 7}))
        assert main(["run", "--config", str(config)]) == EXIT_CONFIG

    def test_run_missing_config(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG

    def test_run_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"scenario": "special_solution", "n": 8, "cutoff_N": 1,
                                      "t_end": 0.02}))
        assert main(["run", "--config", str(config), "--out", str(blocker / "x")]) == EXIT_FAILURE

    def test_probe_bony(self, capsys):
        assert main(["probe", "--estimate", "bony", "--samples", "2"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["estimate_id"] == "bony"

    def test_probe_needs_samples(self):
        assert main(["probe", "--estimate", "bony", "--samples", "0"]) == EXIT_CONFIG
