"""Numerical laboratory for a self-similar Sturm-Liouville string.

The operator d/dm d/dx on self-similarly blown-up intervals, with m the
two-weight self-similar measure: transfer matrices by renormalization and
by brute force, spectra and density of states, projective dynamics of the
renormalization map, and the square-summability dichotomy that separates
pure-point from continuous spectrum.
"""

__version__ = "0.1.0"

from .model import BlowupPrefix, CellAddress, ModelParams, Tail, derive_params
from .propagator import PropagatorEntries, curve_point, entries
from .spectral import Classification, EigenLabel, RootSet, classify, find_root_set, lyapunov
from .string_oracle import DiscreteString, discretize, propagate

__all__ = [
    "BlowupPrefix",
    "CellAddress",
    "Classification",
    "DiscreteString",
    "EigenLabel",
    "ModelParams",
    "PropagatorEntries",
    "RootSet",
    "Tail",
    "__version__",
    "classify",
    "curve_point",
    "derive_params",
    "discretize",
    "entries",
    "find_root_set",
    "lyapunov",
    "propagate",
]
