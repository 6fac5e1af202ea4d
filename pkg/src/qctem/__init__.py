"""Quantum-circuit simulation of conventional TEM imaging.

The classical FFT pipeline (:mod:`qctem.classical`) and the gate-level
statevector circuit (:mod:`qctem.quantum`) share grids, optics and
specimen potentials so their image waves can be compared elementwise.
"""

from .errors import ConfigError, DomainError, QctemError
from .optics import DerivedOptics, MicroscopeParams
from .wavefield import ComplexField, GridSpec

__all__ = ["ComplexField", "ConfigError", "DerivedOptics", "DomainError", "GridSpec", "MicroscopeParams", "QctemError"]
__version__ = "0.1.0"
