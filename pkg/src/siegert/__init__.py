"""Resonant (Siegert) states of open one-dimensional quantum systems."""

from .core import (ADVANCED, NATURAL, RETARDED, ComplexEnergy, ComplexWaveNumber, ResonantState,
                   Units, WaveField)
from .errors import SiegertError

__all__ = ["ADVANCED", "NATURAL", "RETARDED", "ComplexEnergy", "ComplexWaveNumber", "ResonantState",
           "SiegertError", "Units", "WaveField"]
__version__ = "0.1.0"
