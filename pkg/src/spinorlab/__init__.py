"""Spectral solvers, Lax-pair verification and curve flows for the
SU(2)-symmetric generalisations of the nonlinear Schrodinger equation."""

from .algebra import SU2Generator, make_generator
from .errors import (BlowupError, FrameDegeneracyError, NonzeroMeanError, ResolutionError,
                     SpinorLabError, TagMismatchError)
from .grid import Field, MeanPolicy, PeriodicGrid
from .integrator import EvolutionConfig, Trajectory, conservation_report, evolve
from .systems import StateNLS, StateSys1, StateSys2

__version__ = "0.1.0"

__all__ = [
    "SU2Generator", "make_generator", "BlowupError", "FrameDegeneracyError", "NonzeroMeanError",
    "ResolutionError", "SpinorLabError", "TagMismatchError", "Field", "MeanPolicy", "PeriodicGrid",
    "EvolutionConfig", "Trajectory", "conservation_report", "evolve", "StateNLS", "StateSys1",
    "StateSys2",
]
