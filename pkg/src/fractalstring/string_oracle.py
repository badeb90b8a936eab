"""Brute-force oracle: point-mass strings and tridiagonal eigenproblems.

The self-similar measure on a blown-up interval is approximated by one
point mass per cell at a fixed subdivision depth.  Everything downstream
is elementary and independent of the renormalization machinery: transfer
matrices are exact ordered products of 2x2 shears, spectra come from
Sturm pivot counts of the mass-symmetrized tridiagonal matrix, and
eigenvectors from inverse iteration.  This module is the ground truth the
renormalization modules are tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import DomainError, NonConvergenceError, PreconditionError, WindowError
from .model import BlowupPrefix, ModelParams, blowup_affine

#: scheme flag values for discretize()
SCHEMES = ("midpoint", "left")


@dataclass(frozen=True)
class DiscreteString:
    """Point masses approximating the measure on a blown-up interval.

    positions are strictly increasing and (for the default midpoint
    scheme) strictly interior to (left, right); masses sum to the total
    measure of the interval.  depth is the subdivision level: 2**depth
    cells, one mass each.
    """

    positions: np.ndarray
    masses: np.ndarray
    left: float
    right: float
    depth: int
    blowup: tuple[int, ...] = ()
    scheme: str = "midpoint"

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def __len__(self) -> int:
        return len(self.positions)


def _unit_cells(alpha: float, depth: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Left endpoints, widths and masses of the 2**depth cells of I."""
    w1 = 1.0 - alpha
    lefts = np.zeros(1)
    widths = np.ones(1)
    masses = np.ones(1)
    for _ in range(depth):
        n = len(lefts)
        lefts2 = np.empty(2 * n)
        widths2 = np.empty(2 * n)
        masses2 = np.empty(2 * n)
        lefts2[0::2] = lefts
        lefts2[1::2] = lefts + alpha * widths
        widths2[0::2] = alpha * widths
        widths2[1::2] = w1 * widths
        masses2[0::2] = w1 * masses
        masses2[1::2] = alpha * masses
        lefts, widths, masses = lefts2, widths2, masses2
    return lefts, widths, masses


def discretize(
    params: ModelParams,
    prefix: BlowupPrefix | Sequence[int] = (),
    depth: int = 0,
    scheme: str = "midpoint",
) -> DiscreteString:
    """One mass per subdivision cell of the blown-up interval.

    depth is the subdivision level relative to I_n (n = len(prefix)); the
    mass of each cell is its exact measure, the position its midpoint (or
    left endpoint under the alternative scheme).
    """
    if depth < 0:
        raise DomainError("depth must be nonnegative")
    if scheme not in SCHEMES:
        raise DomainError(f"unknown scheme {scheme!r}")
    symbols = prefix.symbols if isinstance(prefix, BlowupPrefix) else tuple(prefix)
    lefts, widths, masses = _unit_cells(params.alpha, depth)
    scale, offset = blowup_affine(params, symbols)
    weights = {1: params.w1, 2: params.w2}
    mass_scale = 1.0
    for sym in symbols:
        mass_scale /= weights[sym]
    if scheme == "midpoint":
        pos = lefts + 0.5 * widths
    else:
        pos = lefts.copy()
    pos = scale * pos + offset
    return DiscreteString(
        positions=pos,
        masses=mass_scale * masses,
        left=offset,
        right=scale + offset,
        depth=depth,
        blowup=symbols,
        scheme=scheme,
    )


def propagate(string: DiscreteString, lam: complex, s: float, t: float) -> np.ndarray:
    """Transfer matrix of the string over [s, t].

    Ordered product of gap factors [[1, ell], [0, 1]] and mass factors
    [[1, 0], [lam*w, 1]]; masses in the half-open range (s, t] are
    included so that consecutive segments compose exactly.  Returns a real
    matrix for real lam.
    """
    if not s < t:
        raise DomainError(f"need s < t, got [{s}, {t}]")
    i0 = int(np.searchsorted(string.positions, s, side="right"))
    i1 = int(np.searchsorted(string.positions, t, side="right"))
    a, b, c, d = _kernels.transfer_product(
        string.positions[i0:i1],
        string.masses[i0:i1],
        complex(lam),
        float(s),
        float(t),
    )
    mat = np.array([[a, b], [c, d]])
    if isinstance(lam, complex) and lam.imag != 0.0:
        return mat
    return mat.real


def propagate_with_values(
    string: DiscreteString,
    lam: float,
    s: float,
    t: float,
    init: tuple[float, float],
) -> tuple[np.ndarray, tuple[float, float]]:
    """Real propagation recording the solution value at every mass in (s, t]."""
    i0 = int(np.searchsorted(string.positions, s, side="right"))
    i1 = int(np.searchsorted(string.positions, t, side="right"))
    vals, f, g = _kernels.propagate_values(
        string.positions[i0:i1],
        string.masses[i0:i1],
        float(lam),
        float(s),
        float(t),
        float(init[0]),
        float(init[1]),
    )
    return vals, (f, g)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Finite d/dm d/dx with Neumann or Dirichlet ends.

    diag/off hold the mass-symmetrized tridiagonal (symmetric, eigenvalues
    <= 0, same spectrum as the operator); masses are kept for converting
    symmetrized eigenvectors back to mass-orthonormal node functions.
    """

    diag: np.ndarray
    off: np.ndarray
    masses: np.ndarray
    boundary: str
    string: DiscreteString = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.diag)

    def gershgorin_floor(self) -> float:
        radius = np.zeros(self.dim)
        radius[:-1] += np.abs(self.off)
        radius[1:] += np.abs(self.off)
        return float(np.min(self.diag - radius))


def build_operator(string: DiscreteString, boundary: str = "neumann") -> TridiagonalOperator:
    """Assemble the finite string operator for one boundary condition.

    Row i encodes (1/m_i) * [(f_{i+1}-f_i)/l_i - (f_i-f_{i-1})/l_{i-1}];
    a Neumann end drops the wall link (zero outward flux), a Dirichlet end
    keeps it against a clamped zero value.
    """
    boundary = boundary.lower()
    if boundary not in ("neumann", "dirichlet"):
        raise DomainError(f"boundary must be neumann or dirichlet, got {boundary!r}")
    pos, mas = string.positions, string.masses
    if len(pos) < 1:
        raise DomainError("string must carry at least one mass")
    ell = np.diff(np.concatenate([[string.left], pos, [string.right]]))
    if np.any(ell <= 0.0) and boundary == "dirichlet":
        raise DomainError("Dirichlet operator needs masses strictly inside the domain")
    cond = np.zeros(len(pos) + 1)
    interior = slice(1, len(pos))
    cond[interior] = 1.0 / ell[interior]
    if boundary == "dirichlet":
        cond[0] = 1.0 / ell[0]
        cond[-1] = 1.0 / ell[-1]
    diag = -(cond[:-1] + cond[1:]) / mas
    off = cond[1:-1] / np.sqrt(mas[:-1] * mas[1:])
    return TridiagonalOperator(diag=diag, off=off, masses=mas, boundary=boundary, string=string)


_PIVOT_FLOOR = 1e-300
_JITTER = 1e-9


def eigen_count(op: TridiagonalOperator, lam: float, _retries: int = 3) -> int:
    """Number of eigenvalues strictly below lam.

    Exact at lam = 0 for the Neumann operator (the constant vector is the
    single zero mode).  A vanishing Sturm pivot triggers the documented
    jitter-and-retry: lam is shifted by 1e-9*(1+|lam|) and the sweep rerun.
    """
    if lam == 0.0 and op.boundary == "neumann":
        return op.dim - 1
    shift = 0.0
    for attempt in range(_retries + 1):
        count, _ = _kernels.sturm_count(op.diag, op.off, lam + shift, _PIVOT_FLOOR)
        if count >= 0:
            return int(count)
        shift = (attempt + 1) * _JITTER * (1.0 + abs(lam))
    raise NonConvergenceError(f"Sturm sweep kept hitting singular pivots at lam={lam}")


def count_in_window(op: TridiagonalOperator, window: tuple[float, float]) -> int:
    """Eigenvalues in the half-open window [a, b)."""
    a, b = window
    if not a < b:
        raise WindowError(f"empty window [{a}, {b})")
    return eigen_count(op, b) - eigen_count(op, a)


@dataclass(frozen=True)
class EigenSolveResult:
    values: np.ndarray
    vectors: np.ndarray | None
    converged: np.ndarray | None  # per-vector inverse-iteration status


def eigen_solve(
    op: TridiagonalOperator,
    window: tuple[float, float],
    tol: float = 1e-10,
    want_vectors: bool = False,
    max_vector_iter: int = 50,
    seed: int = 20_240_601,
) -> EigenSolveResult:
    """All eigenvalues in [a, b), each located by bisection on eigen_count.

    Eigenvalues come back ascending and are simple (point-mass strings
    have simple spectra).  Optional eigenvectors by inverse iteration, at
    most 50 sweeps each, mass-orthonormal on return.
    """
    a, b = window
    if not a < b:
        raise WindowError(f"empty window [{a}, {b})")
    n_lo = eigen_count(op, a)
    n_hi = eigen_count(op, b)
    values = np.empty(n_hi - n_lo)
    floor = min(a, op.gershgorin_floor() - 1.0)
    for j, k in enumerate(range(n_lo, n_hi)):
        lo, hi = floor, b
        # invariant: count(lo) <= k < count(hi)
        while hi - lo > tol * max(1.0, abs(lo)):
            mid = 0.5 * (lo + hi)
            if eigen_count(op, mid) > k:
                hi = mid
            else:
                lo = mid
        values[j] = 0.5 * (lo + hi)
    if not want_vectors:
        return EigenSolveResult(values=values, vectors=None, converged=None)

    rng = np.random.default_rng(seed)
    dim = op.dim
    vectors = np.empty((dim, len(values)))
    converged = np.zeros(len(values), dtype=bool)
    scale = float(np.max(np.abs(op.diag))) + 1.0
    for j, lam in enumerate(values):
        ab = np.zeros((3, dim))
        ab[0, 1:] = op.off
        ab[1, :] = op.diag - (lam + 1e-12 * scale)
        ab[2, :-1] = op.off
        v = rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        ok = False
        for _ in range(max_vector_iter):
            try:
                v = scipy.linalg.solve_banded((1, 1), ab, v)
            except scipy.linalg.LinAlgError:
                break
            v /= np.linalg.norm(v)
            resid = _tridiag_apply(op, v) - lam * v
            if np.linalg.norm(resid) <= 1e-10 * scale:
                ok = True
                break
        converged[j] = ok
        # symmetrized eigenvector -> mass-orthonormal node function
        f = v / np.sqrt(op.masses)
        f /= math.sqrt(float(np.sum(op.masses * f * f)))
        vectors[:, j] = f
    return EigenSolveResult(values=values, vectors=vectors, converged=converged)


def _tridiag_apply(op: TridiagonalOperator, v: np.ndarray) -> np.ndarray:
    out = op.diag * v
    out[:-1] += op.off * v[1:]
    out[1:] += op.off * v[:-1]
    return out


def eigen_full(op: TridiagonalOperator) -> tuple[np.ndarray, np.ndarray]:
    """Complete spectrum and mass-orthonormal eigenbasis (dense solve).

    Intended for moderate sizes (completeness checks); the bisection path
    stays the method of record for large strings.
    """
    if op.dim > 5000:
        raise PreconditionError("dense eigendecomposition capped at dim 5000")
    if op.dim == 1:
        w = np.array([op.diag[0]])
        v = np.ones((1, 1))
    else:
        w, v = scipy.linalg.eigh_tridiagonal(op.diag, op.off)
    funcs = v / np.sqrt(op.masses)[:, None]
    norms = np.sqrt(np.sum(op.masses[:, None] * funcs * funcs, axis=0))
    return w, funcs / norms
