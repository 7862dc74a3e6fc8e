"""Parameter and result models."""

from .parameters import (
    J0_FIRST_ZERO,
    DetectionChain,
    Environment,
    FeedbackController,
    GasNoiseModel,
    LaserSource,
    MechanicalMode,
    OpticalCavity,
    OpticalSpot,
)
from .results import (
    BudgetReport,
    CoolingResult,
    DecadeSummary,
    LorentzianFit,
    ManifestEntry,
    RunManifest,
    ScanPoint,
)

__all__ = [
    "J0_FIRST_ZERO",
    "BudgetReport",
    "CoolingResult",
    "DecadeSummary",
    "DetectionChain",
    "Environment",
    "FeedbackController",
    "GasNoiseModel",
    "LaserSource",
    "LorentzianFit",
    "ManifestEntry",
    "MechanicalMode",
    "OpticalCavity",
    "OpticalSpot",
    "RunManifest",
    "ScanPoint",
]
