"""
Tests for scenario loading, validation and the resolved-config dump.
"""

import pytest

from optosense.config import Scenario, load_scenario, scenario_from_text
from optosense.errors import ConfigurationError, ScenarioParseError
from optosense.physics.cavity import cavity_bandwidth, finesse
from optosense.spectra.spectrum import FrequencyGrid, SpectrumUnit


class TestShippedScenario:
    """The reference scenario bundled with the package."""

    def test_loads(self, reference_config_path):
        scenario = load_scenario(reference_config_path)
        assert isinstance(scenario, Scenario)
        assert finesse(scenario.cavity) == pytest.approx(3.0e4, rel=0.01)
        assert cavity_bandwidth(scenario.cavity) == pytest.approx(1.05e6, rel=0.01)
        assert len(scenario.modes) == 8
        assert scenario.modes[0].label == "m814"
        assert scenario.modes[0].fem_frequency_hz == pytest.approx(890e3)
        assert all(5e3 <= mode.quality_factor <= 1.5e4 for mode in scenario.modes)
        assert max(mode.resonance_frequency_hz for mode in scenario.modes) < scenario.grid.f_max_hz
        assert scenario.laser.frequency_noise.unit == SpectrumUnit.FREQUENCY
        assert scenario.gas.scale_factor == pytest.approx((1e-2 / 1013.25) ** 2)
        assert scenario.feedback.gains == [0.0, 1.0, 3.0, 9.0, 59.0]
        assert scenario.run.seed == 1234
        assert scenario.wants("timeseries")

    def test_relative_paths_do_not_depend_on_cwd(self, scenario_dir, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        scenario = load_scenario(scenario_dir / "paper.cfg")
        assert scenario.gas.envelope_file == (scenario_dir / "gas_index_noise.csv").resolve()

    def test_resolved_dump_reloads(self, reference_config_path, tmp_path):
        scenario = load_scenario(reference_config_path)
        text = scenario.to_config_text()
        dump = tmp_path / "resolved_config"
        dump.write_text(text)
        reloaded = load_scenario(dump)
        assert reloaded.to_config_text() == text
        assert reloaded.modes == scenario.modes
        assert reloaded.cavity == scenario.cavity
        assert reloaded.grid == scenario.grid
        assert reloaded.feedback == scenario.feedback
        assert reloaded.laser.frequency_noise == scenario.laser.frequency_noise

    def test_overrides(self, reference_config_path):
        scenario = load_scenario(reference_config_path)
        grid = FrequencyGrid.parse("1e4,4e6,500,log")
        changed = scenario.with_overrides(seed=7, grid=grid)
        assert changed.run.seed == 7
        assert changed.grid.n_points == 500
        assert scenario.run.seed == 1234
        assert scenario.with_overrides() is scenario


class TestSyntaxErrors:
    """Parse failures carry line and column."""

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.cfg"
        path.write_text("")
        with pytest.raises(ScenarioParseError) as info:
            load_scenario(path)
        assert info.value.line == 1

    def test_missing_equals(self, tmp_path):
        with pytest.raises(ScenarioParseError) as info:
            scenario_from_text("[cavity]\nlength_m\n", tmp_path)
        assert (info.value.line, info.value.column) == (2, 1)
        assert str(info.value).startswith("line 2, column 1:")

    def test_missing_section_header(self, tmp_path):
        with pytest.raises(ScenarioParseError) as info:
            scenario_from_text("length_m = 1\n", tmp_path)
        assert info.value.line == 1

    def test_duplicate_key(self, tmp_path):
        with pytest.raises(ScenarioParseError) as info:
            scenario_from_text("[cavity]\nlength_m = 1\nlength_m = 2\n", tmp_path)
        assert info.value.line == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_scenario(tmp_path / "absent.cfg")


class TestValidation:
    """Semantic errors name the offending section and key."""

    def test_zero_transmission(self, edit_scenario):
        path = edit_scenario(("input_transmission_T = 7.0e-5", "input_transmission_T = 0"))
        with pytest.raises(ConfigurationError, match="input_transmission_T") as info:
            load_scenario(path)
        assert info.value.section == "cavity"

    def test_unknown_key(self, edit_scenario):
        path = edit_scenario(("length_m = 2.4e-3", "length_m = 2.4e-3\ncolour = red"))
        with pytest.raises(ConfigurationError, match="colour") as info:
            load_scenario(path)
        assert info.value.key == "colour"

    def test_unknown_section(self, edit_scenario):
        path = edit_scenario(append="\n[extras]\nanswer = 42\n")
        with pytest.raises(ConfigurationError, match=r"\[extras\]"):
            load_scenario(path)

    def test_missing_required_section(self, edit_scenario):
        path = edit_scenario(
            ("[detection]\nmode_matching_eta = 0.91\ndetection_efficiency_eta_ph = 0.93\n", "")
        )
        with pytest.raises(ConfigurationError, match=r"\[detection\]"):
            load_scenario(path)

    def test_missing_referenced_file(self, edit_scenario):
        path = edit_scenario(("table = paper_modes.csv", "table = nowhere.csv"))
        with pytest.raises(ConfigurationError, match="nowhere.csv") as info:
            load_scenario(path)
        assert info.value.section == "modes"

    def test_wavelength_mismatch(self, edit_scenario):
        path = edit_scenario(
            (
                "wavelength_m = 1.064e-6\nmodulation_index",
                "wavelength_m = 1.55e-6\nmodulation_index",
            )
        )
        with pytest.raises(ConfigurationError, match="wavelength"):
            load_scenario(path)

    def test_unknown_target_mode(self, edit_scenario):
        path = edit_scenario(("target_mode = m814\ngains", "target_mode = m999\ngains"))
        with pytest.raises(ConfigurationError, match="m999"):
            load_scenario(path)

    def test_unsorted_gains(self, edit_scenario):
        path = edit_scenario(("gains = 0, 1, 3, 9, 59", "gains = 9, 1"))
        with pytest.raises(ConfigurationError, match="ascending") as info:
            load_scenario(path)
        assert info.value.section == "feedback"

    def test_unknown_output_kind(self, edit_scenario):
        path = edit_scenario(
            ("outputs = spectra, summary, timeseries", "outputs = spectra, plots")
        )
        with pytest.raises(ConfigurationError, match=r"\[run\]"):
            load_scenario(path)

    def test_inline_modes(self, edit_scenario):
        path = edit_scenario(
            (
                "table = paper_modes.csv",
                "m814 = 814e3, 1.9e-7, 1e4\nm2 = 1.3e6, 5e-8, 5e3, 1.4e6, 4e-8",
            )
        )
        scenario = load_scenario(path)
        assert [mode.label for mode in scenario.modes] == ["m814", "m2"]
        assert scenario.modes[0].fem_frequency_hz is None
        assert scenario.mode("m2").fem_effective_mass_kg == pytest.approx(4e-8)

    def test_malformed_inline_mode(self, edit_scenario):
        path = edit_scenario(("table = paper_modes.csv", "m814 = 814e3, 1.9e-7"))
        with pytest.raises(ConfigurationError, match="m814"):
            load_scenario(path)

    def test_optional_section_required_by_command(self, config_without_feedback):
        scenario = load_scenario(config_without_feedback)
        assert scenario.feedback is None
        with pytest.raises(ConfigurationError, match=r"\[feedback\]") as info:
            scenario.require("feedback", "cool")
        assert info.value.section == "feedback"
