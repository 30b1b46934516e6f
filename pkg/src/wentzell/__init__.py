"""Nonlinear elliptic problems with Wentzell-Robin boundary conditions.

Modules
-------
orlicz      N-functions, growth conditions, modular and Luxemburg norms
domain      P1 meshes of an interval or rectangle with lumped measures
forms       discrete energies, gradients and the weak form
solver      convex minimization (perturbed and resonant problems)
resonance   solvability at resonance
estimates   truncations, level sets and max-norm stability
cli         command-line driver
"""
from .domain import DiscreteDomain, FieldPair, build_interval, build_rectangle
from .errors import WentzellError
from .forms import Mode, ProblemSpec
from .kernels import BACKEND
from .orlicz import NFunction, make_nfunction

__all__ = [
    "BACKEND", "DiscreteDomain", "FieldPair", "Mode", "NFunction", "ProblemSpec", "WentzellError",
    "build_interval", "build_rectangle", "make_nfunction",
]
__version__ = "0.1.0"
