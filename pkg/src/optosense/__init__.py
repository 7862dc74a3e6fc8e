"""
optosense - Optomechanical displacement sensing simulator

Models a high-finesse cavity reading out a vibrating mirror:
- PDH readout and shot-noise-limited sensitivity
- Thermal noise of mechanical modes and the full noise budget
- Cold-damping feedback cooling
- Synthetic records, Welch estimation and Lorentzian fits

Every command emits plot-ready CSV files with a hashed manifest.
"""

__version__ = "1.0.0"
__author__ = "Optosense Team"
