"""
Pytest configuration and fixtures.
"""

import shutil
import sys
from pathlib import Path

import pytest

# Add src to path for imports
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

from optosense.config import default_config_path  # noqa: E402
from optosense.models.parameters import (  # noqa: E402
    DetectionChain,
    Environment,
    LaserSource,
    MechanicalMode,
    OpticalCavity,
)


@pytest.fixture
def reference_cavity():
    """2.4 mm cavity with 70 ppm input transmission and 140 ppm other losses."""
    return OpticalCavity(
        length_m=2.4e-3,
        input_transmission_T=7.0e-5,
        round_trip_loss_L=1.4e-4,
        wavelength_m=1.064e-6,
        waist_m=6.0e-5,
    )


@pytest.fixture
def reference_laser():
    return LaserSource(power_w=1.5e-3, wavelength_m=1.064e-6, modulation_index=0.66)


@pytest.fixture
def reference_detection():
    return DetectionChain(mode_matching_eta=0.91, detection_efficiency_eta_ph=0.93)


@pytest.fixture
def room_temperature():
    return Environment(temperature_k=300.0)


@pytest.fixture
def reference_mode():
    """The 814 kHz mode: 190 ug effective mass, Q = 10^4."""
    return MechanicalMode(
        label="m814",
        resonance_frequency_hz=814e3,
        effective_mass_kg=1.9e-7,
        quality_factor=1e4,
        fem_frequency_hz=890e3,
        fem_effective_mass_kg=1.3e-7,
    )


@pytest.fixture
def reference_config_path():
    return default_config_path()


@pytest.fixture
def scenario_dir(tmp_path):
    """Writable copy of the shipped scenario and its data files."""
    target = tmp_path / "scenario"
    shutil.copytree(default_config_path().parent, target, ignore=shutil.ignore_patterns("*.py"))
    return target


@pytest.fixture
def edit_scenario(scenario_dir):
    """Return a function writing a modified copy of paper.cfg and returning its path."""

    def edit(*replacements, name="edited.cfg", append=""):
        text = (scenario_dir / "paper.cfg").read_text(encoding="utf-8")
        for old, new in replacements:
            assert old in text, f"{old!r} not found in paper.cfg"
            text = text.replace(old, new)
        path = scenario_dir / name
        path.write_text(text + append, encoding="utf-8")
        return path

    return edit


FEEDBACK_SECTION = (
    "[feedback]\ntarget_mode = m814\ngains = 0, 1, 3, 9, 59\nimprecision_psd_m2_hz = 0.0\n"
    "imprecision_from_shot_noise = false\nenabled = true\n"
)


@pytest.fixture
def config_without_feedback(edit_scenario):
    """paper.cfg with the [feedback] section removed."""
    return edit_scenario((FEEDBACK_SECTION, ""), name="no_feedback.cfg")
