"""
Scenario pipeline: one command per figure of the experiment.

Provides:
- budget: displacement-noise budget with per-component spectra
- cool: cold-damping gain sweep
- scan: thermal level along a lateral spot scan
- fit: synthesize, Welch-estimate and fit a resonance
- synth: synthesize a detector record from the full model

Every run writes `resolved_config` and a `manifest.txt` listing each file
with its size and SHA-256.
"""

import logging
import time
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..config import Scenario
from ..errors import ConfigurationError, DomainError
from ..models.parameters import FeedbackController
from ..models.results import ManifestEntry, RunManifest
from ..physics.budget import budget_summary_text, compose_budget
from ..physics.cavity import shot_noise_floor
from ..physics.cold_damping import closed_loop_linewidth, closed_loop_psd_values, gain_sweep
from ..physics.mechanics import thermal_displacement_psd_values
from ..physics.modeshape import (
    clamped_beam_mode_shape,
    mode_shape_from_grid_file,
    overlap_scan,
)
from ..spectra.io import (
    CSV_FLOAT_FORMAT,
    TimeSeries,
    write_manifest,
    write_spectrum_csv,
    write_timeseries_binary,
    write_timeseries_csv,
)
from .fitting import equipartition_temperature, fit_lorentzian
from .synthesis import record_length, synthesize_timeseries
from .welch import welch_psd

logger = logging.getLogger(__name__)

COMMANDS = ("budget", "cool", "scan", "fit", "synth")
RESOLVED_CONFIG = "resolved_config"
MANIFEST = "manifest.txt"
TIMESERIES_CSV_LIMIT = 100_000

ProgressCallback = Callable[[str, float], None]


def _fmt(value: float) -> str:
    return CSV_FLOAT_FORMAT % value


def _write_table(path: Path, header: str, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(v if isinstance(v, str) else _fmt(v) for v in row) + "\n")
    return path


class ScenarioPipeline:
    """
    Runs CLI commands against a validated scenario.

    Each command returns the files it wrote; run() adds the resolved-config
    dump and the manifest.
    """

    def __init__(self, scenario: Scenario, max_workers: Optional[int] = None):
        self.scenario = scenario
        self.max_workers = max_workers

    def run(
        self,
        command: str,
        out_dir: str | Path,
        progress_callback: Optional[ProgressCallback] = None,
    ) -> RunManifest:
        """
        Execute one command and write its outputs.

        Args:
            command: One of budget, cool, scan, fit, synth
            out_dir: Output directory (created if missing)
            progress_callback: Optional callback(stage_name, progress_0_to_1)

        Returns:
            RunManifest listing every written file

        Raises:
            ConfigurationError: Unknown command or missing scenario section
        """
        if command not in COMMANDS:
            raise ConfigurationError(f"unknown command {command!r}; expected one of {COMMANDS}")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        start_time = time.time()

        def update_progress(stage: str, progress: float):
            if progress_callback:
                progress_callback(stage, progress)

        update_progress(command, 0.0)
        logger.info("running '%s' into %s", command, out_dir)
        handler = getattr(self, f"_run_{command}")
        files = list(handler(out_dir, update_progress))

        resolved = out_dir / RESOLVED_CONFIG
        resolved.write_text(self.scenario.to_config_text(), encoding="utf-8", newline="\n")
        files.append(resolved)
        manifest_path = write_manifest(out_dir, files)
        update_progress(command, 1.0)
        logger.info(
            "'%s' wrote %d files in %.2f s", command, len(files), time.time() - start_time
        )
        return RunManifest(
            command=command, out_dir=str(out_dir), entries=self._read_manifest(manifest_path)
        )

    @staticmethod
    def _read_manifest(path: Path) -> list[ManifestEntry]:
        entries = []
        for line in path.read_text(encoding="utf-8").splitlines()[1:]:
            name, size, digest = line.split(",")
            entries.append(ManifestEntry(file=name, bytes=int(size), sha256=digest))
        return entries

    def _run_budget(self, out_dir: Path, progress: ProgressCallback) -> list[Path]:
        s = self.scenario
        report = compose_budget(
            s.cavity,
            s.laser,
            s.detection,
            s.environment,
            s.modes,
            s.grid,
            gas=s.gas,
            backgrounds=s.backgrounds,
        )
        progress("budget", 0.5)
        files = []
        if s.wants("spectra"):
            spectra = {**report.components, **report.mode_components, "total": report.total}
            if report.sensing_floor is not None:
                spectra["sensing_floor"] = report.sensing_floor
            for name, spectrum in sorted(spectra.items()):
                files.append(write_spectrum_csv(spectrum, out_dir / f"{name}.csv"))
        if s.wants("summary"):
            summary = out_dir / "budget_summary.txt"
            summary.write_text(budget_summary_text(report), encoding="utf-8", newline="\n")
            files.append(summary)
        return files

    def _imprecision_psd(self, mode) -> float:
        s = self.scenario
        feedback = s.feedback
        if feedback.imprecision_from_shot_noise:
            floor = shot_noise_floor(s.cavity, s.laser, s.detection, mode.resonance_frequency_hz)
            return float(floor) ** 2
        return feedback.imprecision_psd_m2_hz

    def _run_cool(self, out_dir: Path, progress: ProgressCallback) -> list[Path]:
        s = self.scenario
        feedback = s.require("feedback", "cool")
        mode = s.mode(feedback.target_mode)
        template = feedback.controller(0.0, self._imprecision_psd(mode))
        results = gain_sweep(
            mode, s.environment, template, feedback.gains, max_workers=self.max_workers
        )
        progress("cool", 0.5)
        files = []
        if s.wants("spectra"):
            for result in results:
                for spectrum in (result.true_motion, result.in_loop):
                    files.append(write_spectrum_csv(spectrum, out_dir / f"{spectrum.label}.csv"))
        if s.wants("summary"):
            rows = [
                (r.gain, r.effective_temperature_k, r.effective_linewidth_hz, r.area_m2)
                for r in results
            ]
            files.append(
                _write_table(
                    out_dir / "cooling_summary.csv", "gain,t_eff_k,linewidth_hz,area_m2", rows
                )
            )
        return files

    def _run_scan(self, out_dir: Path, progress: ProgressCallback) -> list[Path]:
        s = self.scenario
        scan = s.require("scan", "scan")
        if scan.mode_shape_file is not None:
            shape = mode_shape_from_grid_file(scan.mode_shape_file)
        else:
            shape = clamped_beam_mode_shape(
                scan.mode_index,
                scan.beam_length_m,
                scan.beam_width_m,
                scan.areal_density_kg_m2,
                scan.nx,
                scan.ny,
            )
        waist = scan.waist_m or s.cavity.waist_m
        positions = np.linspace(scan.start_m, scan.stop_m, scan.n_positions)
        points = overlap_scan(shape, waist, positions, scan.scan_y_m)
        progress("scan", 0.5)
        files = []
        if s.wants("summary"):
            files.append(
                _write_table(
                    out_dir / "scan.csv",
                    "position_m,relative_level",
                    [(p.position_m, p.relative_level) for p in points],
                )
            )
            files.append(
                _write_table(
                    out_dir / "effective_mass.csv",
                    "position_m,effective_mass_kg,captured_fraction",
                    [(p.position_m, p.effective_mass_kg, p.captured_fraction) for p in points],
                )
            )
        return files

    def _workers(self, settings) -> Optional[int]:
        return self.max_workers or settings.max_workers

    def _record_samples(self, settings, highest_frequency: float) -> int:
        if settings.sample_rate_hz <= 2.0 * highest_frequency:
            raise DomainError(
                f"sample rate {settings.sample_rate_hz:g} Hz does not reach twice "
                f"{highest_frequency:g} Hz"
            )
        return record_length(
            settings.sample_rate_hz, settings.resolution_bandwidth_hz, settings.averages
        )

    def _run_fit(self, out_dir: Path, progress: ProgressCallback) -> list[Path]:
        s = self.scenario
        settings = s.require("estimation", "fit")
        mode = s.mode(settings.target_mode)
        controller = FeedbackController(gain=settings.feedback_gain)
        linewidth = closed_loop_linewidth(mode, controller)
        half_window = settings.fit_window_linewidths * linewidth
        f0 = mode.resonance_frequency_hz
        window = (max(f0 - half_window, 0.0), f0 + half_window)
        n = self._record_samples(settings, window[1])

        def model(f: np.ndarray) -> np.ndarray:
            return closed_loop_psd_values(mode, s.environment, controller, f)[0]

        fs = settings.sample_rate_hz
        series = synthesize_timeseries(model, fs, n / fs, s.run.seed)
        progress("fit", 0.4)
        psd = welch_psd(series, settings.resolution_bandwidth_hz, self._workers(settings))
        del series
        progress("fit", 0.7)
        fit = fit_lorentzian(psd, window, s.environment, settings.fit_model)
        temperature = equipartition_temperature(psd, fit, mode.effective_mass_kg)

        files = []
        if s.wants("spectra"):
            files.append(write_spectrum_csv(psd, out_dir / "welch_psd.csv"))
        if s.wants("summary"):
            rows = [
                ("center_frequency_hz", fit.center_frequency_hz),
                ("center_stderr_hz", fit.center_stderr_hz),
                ("linewidth_hz", fit.linewidth_hz),
                ("linewidth_stderr_hz", fit.linewidth_stderr_hz),
                ("quality_factor", fit.quality_factor),
                ("peak_psd_m2_hz", fit.peak_psd),
                ("background_psd_m2_hz", fit.background_psd),
                ("area_m2", fit.area_m2),
                ("effective_mass_kg", fit.effective_mass_kg),
                ("effective_temperature_k", temperature),
                ("residual_norm", fit.residual_norm),
                ("points_per_linewidth", fit.points_per_linewidth),
                ("resolution_bandwidth_hz", psd.resolution_bandwidth),
            ]
            files.append(_write_table(out_dir / "fit_summary.csv", "quantity,value", rows))
        return files

    def _run_synth(self, out_dir: Path, progress: ProgressCallback) -> list[Path]:
        s = self.scenario
        settings = s.require("estimation", "synth")
        target = s.mode(settings.target_mode)
        n = self._record_samples(settings, target.resonance_frequency_hz)
        nyquist = 0.5 * settings.sample_rate_hz
        above = [m.label for m in s.modes if m.resonance_frequency_hz >= nyquist]
        if above:
            logger.info("modes above Nyquist contribute only their in-band tails: %s", above)

        def model(f: np.ndarray) -> np.ndarray:
            total = shot_noise_floor(s.cavity, s.laser, s.detection, f) ** 2
            for mode in s.modes:
                total = total + thermal_displacement_psd_values(mode, s.environment, f)
            return total

        fs = settings.sample_rate_hz
        series: TimeSeries = synthesize_timeseries(model, fs, n / fs, s.run.seed)
        progress("synth", 0.5)
        files = []
        if s.wants("timeseries"):
            files.append(write_timeseries_binary(series, out_dir / "timeseries.bin"))
            if len(series) <= TIMESERIES_CSV_LIMIT:
                files.append(write_timeseries_csv(series, out_dir / "timeseries.csv"))
        if s.wants("spectra"):
            psd = welch_psd(series, settings.resolution_bandwidth_hz, self._workers(settings))
            files.append(write_spectrum_csv(psd, out_dir / "welch_psd.csv"))
        return files


def run_command(
    scenario: Scenario,
    command: str,
    out_dir: str | Path,
    progress_callback: Optional[ProgressCallback] = None,
) -> RunManifest:
    """Run one command on a scenario; see ScenarioPipeline.run()."""
    return ScenarioPipeline(scenario).run(command, out_dir, progress_callback)
