"""
Scenario files: loading, validation and the resolved-config dump.

A scenario is an INI-like text file. Keys carry their unit in the name and
unknown sections or keys are rejected. File references are resolved against
the directory of the scenario file.
"""

import configparser
import logging
import math
from importlib import resources
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigurationError, ScenarioParseError, format_validation_error
from .models.parameters import (
    DetectionChain,
    Environment,
    FeedbackController,
    GasNoiseModel,
    LaserSource,
    MechanicalMode,
    OpticalCavity,
)
from .physics.mechanics import check_unique_labels, read_mode_table
from .spectra.io import read_spectrum_csv
from .spectra.spectrum import FrequencyGrid, NoiseSpectrum, SpectrumUnit

logger = logging.getLogger(__name__)

OUTPUT_KINDS = ("spectra", "summary", "timeseries")
SECTIONS = (
    "cavity",
    "laser",
    "detection",
    "environment",
    "modes",
    "gas",
    "feedback",
    "grid",
    "scan",
    "estimation",
    "background",
    "run",
)
REQUIRED_SECTIONS = ("cavity", "laser", "detection", "modes", "grid")
MODE_COLUMNS = ("resonance_frequency_hz", "effective_mass_kg", "quality_factor")
FEM_COLUMNS = ("fem_frequency_hz", "fem_effective_mass_kg")


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class SettingsModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class FeedbackSettings(SettingsModel):
    """Cold-damping settings for the `cool` command."""
    target_mode: Optional[str] = Field(default=None, description="Mode label; default first mode")
    gains: list[float] = Field(default_factory=lambda: [0.0])
    imprecision_psd_m2_hz: float = Field(default=0.0, ge=0)
    imprecision_from_shot_noise: bool = Field(
        default=False, description="Use the shot-noise floor at f_m as imprecision noise"
    )
    enabled: bool = True

    @field_validator("gains", mode="before")
    @classmethod
    def _split_gains(cls, value):
        return _split_list(value)

    @field_validator("gains")
    @classmethod
    def _check_gains(cls, gains: list[float]) -> list[float]:
        if not gains:
            raise ValueError("at least one gain is required")
        if any(g < 0 for g in gains):
            raise ValueError("gains must be non-negative")
        if any(b < a for a, b in zip(gains, gains[1:])):
            raise ValueError("gains must be sorted in ascending order")
        return gains

    def controller(self, gain: float, imprecision_psd: float) -> FeedbackController:
        return FeedbackController(
            gain=gain, imprecision_psd_m2_hz=imprecision_psd, enabled=self.enabled
        )


class ScanSettings(SettingsModel):
    """Lateral spot scan over a mode shape for the `scan` command."""
    mode_index: int = Field(default=1, ge=1, le=10, description="Clamped-beam mode number")
    beam_length_m: float = Field(default=1.0e-3, gt=0)
    beam_width_m: Optional[float] = Field(default=None, gt=0)
    areal_density_kg_m2: float = Field(default=0.1398, gt=0)
    nx: int = Field(default=401, ge=3)
    ny: int = Field(default=41, ge=2)
    mode_shape_file: Optional[Path] = Field(
        default=None, description="Lattice export replacing the analytic beam shape"
    )
    waist_m: Optional[float] = Field(default=None, gt=0, description="Default: cavity waist")
    scan_y_m: Optional[float] = None
    start_m: float = 0.0
    stop_m: float = 1.0e-3
    n_positions: int = Field(default=41, ge=1)

    @model_validator(mode="after")
    def _check_range(self):
        if self.stop_m < self.start_m:
            raise ValueError("stop_m must not be below start_m")
        return self


class EstimationSettings(SettingsModel):
    """Synthesis, Welch and fit settings for the `fit` and `synth` commands."""
    target_mode: Optional[str] = None
    sample_rate_hz: float = Field(default=2.0e6, gt=0)
    resolution_bandwidth_hz: float = Field(default=20.0, gt=0)
    averages: int = Field(default=200, ge=1)
    fit_window_linewidths: float = Field(default=15.0, gt=0)
    fit_model: Literal["lorentzian", "exact"] = "lorentzian"
    feedback_gain: float = Field(default=0.0, ge=0, description="Closed-loop gain of the record")
    max_workers: Optional[int] = Field(default=None, ge=1)


class RunSettings(SettingsModel):
    seed: int = Field(default=0, ge=0)
    outputs: list[Literal["spectra", "summary", "timeseries"]] = Field(
        default_factory=lambda: list(OUTPUT_KINDS)
    )

    @field_validator("outputs", mode="before")
    @classmethod
    def _split_outputs(cls, value):
        return _split_list(value)


class Scenario(BaseModel):
    """Everything one CLI run needs, validated."""
    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    cavity: OpticalCavity
    laser: LaserSource
    detection: DetectionChain
    environment: Environment = Field(default_factory=Environment)
    modes: list[MechanicalMode] = Field(..., min_length=1)
    gas: Optional[GasNoiseModel] = None
    feedback: Optional[FeedbackSettings] = None
    grid: FrequencyGrid
    scan: Optional[ScanSettings] = None
    estimation: Optional[EstimationSettings] = None
    backgrounds: dict[str, NoiseSpectrum] = Field(default_factory=dict)
    background_files: dict[str, Path] = Field(default_factory=dict)
    run: RunSettings = Field(default_factory=RunSettings)

    @model_validator(mode="after")
    def _check_consistency(self):
        if not math.isclose(self.cavity.wavelength_m, self.laser.wavelength_m, rel_tol=1e-9):
            raise ValueError("laser and cavity wavelengths differ")
        check_unique_labels(self.modes)
        labels = {mode.label for mode in self.modes}
        for section in (self.feedback, self.estimation):
            if section is not None and section.target_mode not in (None, *labels):
                raise ValueError(f"target_mode {section.target_mode!r} is not a mode label")
        return self

    def mode(self, label: Optional[str] = None) -> MechanicalMode:
        if label is None:
            return self.modes[0]
        for mode in self.modes:
            if mode.label == label:
                return mode
        raise ConfigurationError(f"no mode labelled {label!r}", section="modes")

    def require(self, section: str, command: str):
        """Return an optional section, or fail naming it."""
        value = getattr(self, section)
        if value is None:
            raise ConfigurationError(
                f"command '{command}' needs a [{section}] section in the scenario", section=section
            )
        return value

    def wants(self, kind: str) -> bool:
        return kind in self.run.outputs

    def with_overrides(
        self, seed: Optional[int] = None, grid: Optional[FrequencyGrid] = None
    ) -> "Scenario":
        update = {}
        if seed is not None:
            update["run"] = self.run.model_copy(update={"seed": seed})
        if grid is not None:
            update["grid"] = grid
        return self.model_copy(update=update) if update else self

    def to_config_text(self) -> str:
        """Resolved-config dump; load_scenario() on it gives back an equal Scenario."""
        sections: list[tuple[str, dict]] = [
            ("cavity", self.cavity.model_dump()),
            ("laser", self.laser.model_dump(exclude={"frequency_noise"})),
            ("detection", self.detection.model_dump()),
            ("environment", self.environment.model_dump()),
            ("modes", {mode.label: _mode_row(mode) for mode in self.modes}),
        ]
        if self.gas is not None:
            sections.append(("gas", self.gas.model_dump(exclude={"reference_envelope"})))
        if self.feedback is not None:
            sections.append(("feedback", self.feedback.model_dump()))
        sections.append(("grid", self.grid.model_dump()))
        if self.scan is not None:
            sections.append(("scan", self.scan.model_dump()))
        if self.estimation is not None:
            sections.append(("estimation", self.estimation.model_dump()))
        if self.background_files:
            sections.append(("background", dict(self.background_files)))
        sections.append(("run", self.run.model_dump()))

        lines = []
        for name, values in sections:
            lines.append(f"[{name}]")
            for key, value in values.items():
                if value is None:
                    continue
                lines.append(f"{key} = {_format_value(value)}")
            lines.append("")
        return "\n".join(lines)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Path):
        return str(value.resolve())
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(item) for item in value)
    return str(value)


def _mode_row(mode: MechanicalMode) -> list[float]:
    row = [getattr(mode, name) for name in MODE_COLUMNS]
    fem = [getattr(mode, name) for name in FEM_COLUMNS]
    if any(value is not None for value in fem):
        row.extend(math.nan if value is None else value for value in fem)
    return row


def default_config_path() -> Path:
    """The shipped scenario describing the reference apparatus."""
    return Path(str(resources.files("optosense.resources.configs") / "paper.cfg"))


def _parse_text(text: str, source: str) -> configparser.ConfigParser:
    if not text.strip():
        raise ScenarioParseError(f"{source}: scenario file is empty", line=1, column=1)
    parser = configparser.ConfigParser(interpolation=None, strict=True, empty_lines_in_values=False)
    parser.optionxform = str
    lines = text.splitlines()

    def column_of(lineno: int) -> int:
        if 1 <= lineno <= len(lines):
            line = lines[lineno - 1]
            return len(line) - len(line.lstrip()) + 1
        return 1

    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ScenarioParseError(
            "expected a [section] header", line=exc.lineno, column=column_of(exc.lineno)
        ) from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else 1
        raise ScenarioParseError(
            "expected 'key = value'", line=lineno, column=column_of(lineno)
        ) from exc
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        lineno = exc.lineno or 1
        raise ScenarioParseError(exc.message, line=lineno, column=column_of(lineno)) from exc
    return parser


def _resolve_path(base: Path, value: str, section: str, key: str) -> Path:
    path = Path(value.strip()).expanduser()
    if not path.is_absolute():
        path = base / path
    if not path.exists():
        raise ConfigurationError(
            f"[{section}] {key}: referenced file not found: {path}", section=section, key=key
        )
    return path.resolve()


def _check_keys(model, section: str, values: dict, internal: tuple[str, ...] = ()) -> None:
    allowed = set(model.model_fields) - set(internal)
    for key in values:
        if key not in allowed:
            raise ConfigurationError(
                f"unknown key '{key}' in [{section}]", section=section, key=key
            )


def _build(model, section: str, values: dict):
    """Instantiate a pydantic model from raw strings, naming the section on failure."""
    try:
        return model(**values)
    except ValidationError as exc:
        problem = exc.errors()[0] if exc.errors() else {}
        location = problem.get("loc", ())
        key = str(location[0]) if location else None
        raise ConfigurationError(
            f"[{section}] {format_validation_error(exc)}", section=section, key=key
        ) from exc
    except (ConfigurationError, ValueError) as exc:
        raise ConfigurationError(f"[{section}] {exc}", section=section) from exc


def _parse_modes(values: dict, base: Path) -> list[MechanicalMode]:
    modes = []
    for key, raw in values.items():
        if key == "table":
            try:
                modes.extend(read_mode_table(_resolve_path(base, raw, "modes", "table")))
            except FileNotFoundError as exc:
                raise ConfigurationError(str(exc), section="modes", key="table") from exc
            continue
        fields = [item.strip() for item in raw.split(",")]
        if len(fields) not in (3, 5):
            raise ConfigurationError(
                f"[modes] {key}: expected f_m_hz, m_eff_kg, q[, fem_f_hz, fem_m_kg]",
                section="modes",
                key=key,
            )
        try:
            numbers = [float(item) for item in fields]
        except ValueError as exc:
            raise ConfigurationError(f"[modes] {key}: {exc}", section="modes", key=key) from exc
        data = dict(zip(MODE_COLUMNS + FEM_COLUMNS, numbers))
        for name in FEM_COLUMNS:
            if name in data and math.isnan(data[name]):
                data[name] = None
        modes.append(_build(MechanicalMode, "modes", {"label": key, **data}))
    if not modes:
        raise ConfigurationError("[modes] lists no modes", section="modes")
    check_unique_labels(modes)
    return modes


def scenario_from_text(text: str, base_dir: Path, source: str = "<scenario>") -> Scenario:
    """Parse and validate scenario text; relative paths resolve against base_dir."""
    parser = _parse_text(text, source)
    if parser.defaults():
        raise ConfigurationError("a [DEFAULT] section is not supported", section="DEFAULT")
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigurationError(f"unknown section [{section}]", section=section)
    for section in REQUIRED_SECTIONS:
        if not parser.has_section(section):
            raise ConfigurationError(f"missing required section [{section}]", section=section)

    raw = {name: dict(parser.items(name)) for name in parser.sections()}
    base = Path(base_dir)
    simple = {
        "cavity": OpticalCavity,
        "detection": DetectionChain,
        "environment": Environment,
        "grid": FrequencyGrid,
        "feedback": FeedbackSettings,
        "estimation": EstimationSettings,
        "run": RunSettings,
    }
    parts: dict = {}
    for section, model in simple.items():
        if section in raw:
            _check_keys(model, section, raw[section])
            parts[section] = _build(model, section, raw[section])

    laser_values = dict(raw["laser"])
    _check_keys(LaserSource, "laser", laser_values, internal=("frequency_noise",))
    if "frequency_noise_file" in laser_values:
        path = _resolve_path(
            base, laser_values["frequency_noise_file"], "laser", "frequency_noise_file"
        )
        laser_values["frequency_noise_file"] = path
        laser_values["frequency_noise"] = read_spectrum_csv(path, SpectrumUnit.FREQUENCY)
    parts["laser"] = _build(LaserSource, "laser", laser_values)
    parts["modes"] = _parse_modes(raw["modes"], base)

    if "gas" in raw:
        gas_values = dict(raw["gas"])
        _check_keys(GasNoiseModel, "gas", gas_values, internal=("reference_envelope",))
        if "envelope_file" not in gas_values:
            raise ConfigurationError(
                "[gas] needs an envelope_file", section="gas", key="envelope_file"
            )
        path = _resolve_path(base, gas_values["envelope_file"], "gas", "envelope_file")
        gas_values["envelope_file"] = path
        gas_values["reference_envelope"] = read_spectrum_csv(path, SpectrumUnit.DISPLACEMENT)
        parts["gas"] = _build(GasNoiseModel, "gas", gas_values)
    if "scan" in raw:
        scan_values = dict(raw["scan"])
        _check_keys(ScanSettings, "scan", scan_values)
        if "mode_shape_file" in scan_values:
            scan_values["mode_shape_file"] = _resolve_path(
                base, scan_values["mode_shape_file"], "scan", "mode_shape_file"
            )
        parts["scan"] = _build(ScanSettings, "scan", scan_values)
    if "background" in raw:
        files = {
            label: _resolve_path(base, value, "background", label)
            for label, value in raw["background"].items()
        }
        parts["background_files"] = files
        parts["backgrounds"] = {
            label: read_spectrum_csv(path, SpectrumUnit.DISPLACEMENT, label=label)
            for label, path in files.items()
        }

    try:
        return Scenario(**parts)
    except ValidationError as exc:
        raise ConfigurationError(f"[scenario] {format_validation_error(exc)}") from exc


def load_scenario(path: str | Path) -> Scenario:
    """
    Load and validate a scenario file.

    Raises:
        FileNotFoundError: If the file does not exist
        ScenarioParseError: On a syntax error (with line and column)
        ConfigurationError: On unknown sections or keys, missing sections,
            missing referenced files or violated parameter invariants
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Scenario file not found: {path}")
    text = path.read_text(encoding="utf-8")
    scenario = scenario_from_text(text, path.parent, source=str(path))
    logger.info("loaded scenario %s (%d modes)", path, len(scenario.modes))
    return scenario
