"""Equivariant SU(2) lattice gauge fields on finite quotients of a 4-d torus.

Basic forms, basic cohomology, anti-self-dual gradient flow, the deformation
index, and bubbling analysis, all on invariant cochains of a periodic lattice
with a finite group of lattice isometries acting on it.
"""
__version__ = "0.1.0"

from .errors import (BranchCutError, DegreeError, EquivarianceError, FoliataError,  # noqa: F401
                     InvalidGenerator, InvarianceError, PerturbationError, UnsupportedHolonomy)
from .presentation import FoliationPresentation, preset, validate  # noqa: F401
from .forms import Cochain  # noqa: F401
from .gauge import EquivariantGaugeField  # noqa: F401
