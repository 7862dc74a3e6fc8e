"""
Tests for the optosense command line.
"""

import logging

import numpy as np
import pytest

from optosense.analysis.pipeline import ScenarioPipeline, run_command
from optosense.config import load_scenario
from optosense.errors import ConfigurationError
from optosense.main import build_parser, main
from optosense.spectra.io import file_sha256, read_spectrum_csv, read_timeseries_binary


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    logging.captureWarnings(False)
    root.handlers[:] = handlers
    root.setLevel(level)


def run_cli(*args):
    return main([str(arg) for arg in args])


def read_table(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


SHORT_RECORD = (
    ("resolution_bandwidth_hz = 20.0", "resolution_bandwidth_hz = 200.0"),
    ("averages = 200", "averages = 10"),
)


class TestParser:
    """Argument parsing."""

    def test_commands(self):
        args = build_parser().parse_args(["budget", "--out", "x", "--seed", "3", "-q"])
        assert args.command == "budget"
        assert args.seed == 3
        assert args.quiet

    def test_out_is_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["budget"])

    def test_verbose_and_quiet_exclusive(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["budget", "--out", "x", "-v", "-q"])


class TestBudgetCommand:
    """`optosense budget` on the shipped scenario."""

    def test_writes_spectra_and_manifest(self, tmp_path):
        out = tmp_path / "budget"
        assert run_cli("budget", "--out", out) == 0
        for name in (
            "frequency.csv",
            "gas.csv",
            "shot.csv",
            "thermal.csv",
            "thermal_m814.csv",
            "total.csv",
            "sensing_floor.csv",
            "budget_summary.txt",
            "resolved_config",
            "manifest.txt",
        ):
            assert (out / name).exists(), name
        header, rows = read_table(out / "manifest.txt")
        assert header == ["file", "bytes", "sha256"]
        names = [row[0] for row in rows]
        assert names == sorted(names)
        assert "resolved_config" in names

    def test_sensing_floor_value(self, tmp_path):
        assert run_cli("budget", "--out", tmp_path) == 0
        floor = read_spectrum_csv(tmp_path / "sensing_floor.csv")
        assert np.sqrt(floor.value_at(1e6)) == pytest.approx(4e-19, rel=0.2)
        total = read_spectrum_csv(tmp_path / "total.csv")
        assert np.sqrt(total.value_at(814e3)) == pytest.approx(2.553e-15, rel=0.01)

    def test_grid_override(self, tmp_path):
        assert run_cli("budget", "--out", tmp_path, "--grid", "1e5,2e6,300,lin") == 0
        total = read_spectrum_csv(tmp_path / "total.csv")
        assert total.f_min == pytest.approx(1e5)
        assert total.f_max == pytest.approx(2e6)
        assert "n_points = 300" in (tmp_path / "resolved_config").read_text()

    def test_resolved_config_reloads(self, tmp_path):
        assert run_cli("budget", "--out", tmp_path / "first") == 0
        resolved = tmp_path / "first" / "resolved_config"
        assert run_cli("budget", "--config", resolved, "--out", tmp_path / "second") == 0
        assert (tmp_path / "second" / "total.csv").read_bytes() == (
            tmp_path / "first" / "total.csv"
        ).read_bytes()


class TestCoolCommand:
    """`optosense cool` gain sweep."""

    def test_cooling_summary(self, tmp_path):
        assert run_cli("cool", "--out", tmp_path) == 0
        header, rows = read_table(tmp_path / "cooling_summary.csv")
        assert header == ["gain", "t_eff_k", "linewidth_hz", "area_m2"]
        gains = [float(row[0]) for row in rows]
        temperatures = [float(row[1]) for row in rows]
        assert gains == [0.0, 1.0, 3.0, 9.0, 59.0]
        np.testing.assert_allclose(temperatures, [300 / (1 + g) for g in gains], rtol=0.01)
        assert (tmp_path / "true_motion_g59.csv").exists()
        assert (tmp_path / "in_loop_g59.csv").exists()

    def test_close_gains_write_separate_files(self, edit_scenario, tmp_path):
        config = edit_scenario(("gains = 0, 1, 3, 9, 59", "gains = 1.2345678, 1.2345679"))
        assert run_cli("cool", "--config", config, "--out", tmp_path) == 0
        for gain in ("1.2345678", "1.2345679"):
            assert (tmp_path / f"true_motion_g{gain}.csv").exists()
        _, rows = read_table(tmp_path / "manifest.txt")
        assert sum(row[0].startswith("true_motion_") for row in rows) == 2

    def test_missing_feedback_section(self, config_without_feedback, tmp_path, capsys):
        config = config_without_feedback
        assert run_cli("cool", "--config", config, "--out", tmp_path / "out") == 2
        message = capsys.readouterr().err.strip().splitlines()[-1]
        assert message.startswith("error: ConfigurationError:")
        assert "[feedback]" in message


class TestScanCommand:
    """`optosense scan` over the clamped-beam fundamental."""

    def test_symmetric_scan(self, tmp_path):
        assert run_cli("scan", "--out", tmp_path) == 0
        header, rows = read_table(tmp_path / "scan.csv")
        assert header == ["position_m", "relative_level"]
        levels = np.array([float(row[1]) for row in rows])
        assert levels.size == 41
        assert levels.max() == pytest.approx(1.0)
        np.testing.assert_allclose(levels, levels[::-1], atol=1e-6)
        assert (tmp_path / "effective_mass.csv").exists()


class TestSynthCommand:
    """`optosense synth` with a short record."""

    def test_timeseries_outputs(self, edit_scenario, tmp_path):
        config = edit_scenario(*SHORT_RECORD)
        assert run_cli("synth", "--config", config, "--out", tmp_path, "--seed", "5") == 0
        series = read_timeseries_binary(tmp_path / "timeseries.bin")
        assert len(series) == 82_500
        assert series.seed == 5
        assert series.sample_rate == 2e6
        assert (tmp_path / "timeseries.csv").exists()
        psd = read_spectrum_csv(tmp_path / "welch_psd.csv")
        assert psd.frequencies[np.argmax(psd.values)] == pytest.approx(814e3, abs=400.0)

    def test_same_seed_same_bytes(self, edit_scenario, tmp_path):
        config = edit_scenario(*SHORT_RECORD)
        assert run_cli("synth", "--config", config, "--out", tmp_path / "a") == 0
        assert run_cli("synth", "--config", config, "--out", tmp_path / "b") == 0
        assert (tmp_path / "a" / "timeseries.bin").read_bytes() == (
            tmp_path / "b" / "timeseries.bin"
        ).read_bytes()


@pytest.mark.slow
class TestFitCommand:
    """`optosense fit` on the shipped scenario."""

    def test_fit_summary(self, tmp_path):
        assert run_cli("fit", "--out", tmp_path) == 0
        _, rows = read_table(tmp_path / "fit_summary.csv")
        summary = {name: float(value) for name, value in rows}
        assert summary["center_frequency_hz"] == pytest.approx(814e3, rel=1e-3)
        assert summary["quality_factor"] == pytest.approx(1e4, rel=0.1)
        assert summary["effective_mass_kg"] == pytest.approx(1.9e-7, rel=0.1)
        assert summary["effective_temperature_k"] == pytest.approx(300.0, rel=0.1)


class TestDeterminism:
    """Two runs with the same seed write identical manifests."""

    @pytest.mark.parametrize(
        "command, edits",
        [
            ("budget", ()),
            ("cool", ()),
            ("scan", ()),
            ("synth", SHORT_RECORD),
            pytest.param("fit", (), marks=pytest.mark.slow),
        ],
    )
    def test_identical_manifests(self, command, edits, edit_scenario, tmp_path):
        config = edit_scenario(*edits)
        assert run_cli(command, "--config", config, "--out", tmp_path / "a") == 0
        assert run_cli(command, "--config", config, "--out", tmp_path / "b") == 0
        first = (tmp_path / "a" / "manifest.txt").read_text()
        assert len(first.splitlines()) > 2
        assert first == (tmp_path / "b" / "manifest.txt").read_text()


class TestRunCommand:
    """Library entry point behind the CLI."""

    def test_manifest_matches_files(self, reference_config_path, tmp_path):
        manifest = run_command(load_scenario(reference_config_path), "scan", tmp_path)
        assert manifest.command == "scan"
        names = [entry.file for entry in manifest.entries]
        assert names == sorted(names)
        assert set(names) == {"scan.csv", "effective_mass.csv", "resolved_config"}
        for entry in manifest.entries:
            path = tmp_path / entry.file
            assert entry.bytes == path.stat().st_size
            assert entry.sha256 == file_sha256(path)


class TestFailures:
    """Exit codes and one-line error messages."""

    def test_empty_config(self, tmp_path, capsys):
        config = tmp_path / "empty.cfg"
        config.write_text("")
        assert run_cli("budget", "--config", config, "--out", tmp_path / "out") == 2
        message = capsys.readouterr().err.strip().splitlines()[-1]
        assert message.startswith("error: ScenarioParseError: line 1, column 1:")

    def test_missing_config(self, tmp_path, capsys):
        assert run_cli("budget", "--config", tmp_path / "nope.cfg", "--out", tmp_path) == 2
        assert "nope.cfg" in capsys.readouterr().err

    def test_bad_grid(self, tmp_path, capsys):
        assert run_cli("budget", "--out", tmp_path, "--grid", "1e4,4e6") == 2
        assert "--grid" in capsys.readouterr().err

    def test_undersampled_synthesis(self, edit_scenario, tmp_path, capsys):
        config = edit_scenario(("sample_rate_hz = 2.0e6", "sample_rate_hz = 1.0e6"))
        assert run_cli("synth", "--config", config, "--out", tmp_path) == 1
        assert "error: DomainError" in capsys.readouterr().err

    def test_unknown_command_in_pipeline(self, reference_config_path, tmp_path):
        pipeline = ScenarioPipeline(load_scenario(reference_config_path))
        with pytest.raises(ConfigurationError):
            pipeline.run("plot", tmp_path)

    def test_progress_callback(self, reference_config_path, tmp_path):
        stages = []
        pipeline = ScenarioPipeline(load_scenario(reference_config_path))
        manifest = pipeline.run("scan", tmp_path, lambda stage, p: stages.append(p))
        assert stages[0] == 0.0 and stages[-1] == 1.0
        assert {entry.file for entry in manifest.entries} >= {"scan.csv", "resolved_config"}
