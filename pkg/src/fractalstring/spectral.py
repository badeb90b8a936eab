"""Spectrum, density of states, Lyapunov exponent, gap classification.

The negative zeros of trace(lam/gamma) generate the whole finite-level
spectrum: level n carries exactly the gamma^p-rescalings of those zeros
for p >= -n (plus the Neumann zero mode).  The integrated density of
states is the 2^{-n}-normalized eigenvalue count, computable either from
those labels or by Sturm counts on the string oracle.  The Lyapunov
exponent of the transfer matrices equals the Green function along the
invariant curve, which classifies each spectral parameter: bounded orbit
means support of the density of states, escaping orbit means gap.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import renorm_map, string_oracle
from .errors import DomainError, PreconditionError, WindowError
from .model import ModelParams
from .propagator import curve_point, trace
from .renorm_map import OrbitSummary, green

DEFAULT_POINTS_PER_OCTAVE = 64


@dataclass(frozen=True)
class RootSet:
    """Negative zeros of trace(lam/gamma), sorted decreasing (shallow first).

    Every root carries a certified sign-change bracket.  window is the
    searched interval, which bounds what eigenvalue enumeration may ask
    for later.
    """

    params: ModelParams
    roots: tuple[float, ...]
    brackets: tuple[tuple[float, float], ...]
    window: tuple[float, float]
    tol: float
    warnings: tuple[str, ...] = ()

    def root(self, k: int) -> float:
        """k-th root, 1-based, shallowest first."""
        if not 1 <= k <= len(self.roots):
            raise DomainError(f"root index {k} outside 1..{len(self.roots)}")
        return self.roots[k - 1]

    def __len__(self) -> int:
        return len(self.roots)


def _bisect_root(fn, lo: float, hi: float, flo: float, rel_tol: float) -> tuple[float, tuple[float, float]]:
    # keeps the sign-change invariant; certified bracket returned
    for _ in range(200):
        if hi - lo <= rel_tol * max(1.0, abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            eps = rel_tol * max(1.0, abs(mid))
            return mid, (mid - eps, mid + eps)
        if (flo < 0.0) == (fm < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi), (lo, hi)


def _golden_min(fn, lo: float, hi: float, iters: int = 60):
    # golden-section minimization of |fn|; returns (x, fn(x)) at the best point
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if abs(fc) < abs(fd):
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
        if b - a < 1e-13 * max(1.0, abs(a)):
            break
    return (c, fc) if abs(fc) < abs(fd) else (d, fd)


def expected_root_count(
    params: ModelParams, window: tuple[float, float], depth: int = 14
) -> int:
    """Independent count of base roots in a window, from the string oracle.

    The zeros of the off-diagonal entry are the Dirichlet spectrum wholly,
    which is the union of all gamma-ladder copies of the base roots; one
    differencing across a gamma-scaling therefore isolates the base copy:
    count(W) - count(W/gamma) on the Dirichlet inertia counts.  Accurate as
    long as the discretization resolves the window (an eigenvalue within
    discretization error of a window edge can shift the count by one).
    """
    op = string_oracle.build_operator(
        string_oracle.discretize(params, (), depth=depth), "dirichlet"
    )
    lo, hi = window
    inner = string_oracle.count_in_window(op, (lo, hi))
    deeper = string_oracle.count_in_window(op, (lo / params.gamma, hi / params.gamma))
    return inner - deeper


def find_root_set(
    params: ModelParams,
    window: tuple[float, float],
    points_per_octave: int = DEFAULT_POINTS_PER_OCTAVE,
    rel_tol: float = 1e-12,
    dip_fraction: float = 1e-3,
    oracle_check_depth: int | None = 14,
) -> RootSet:
    """Locate all zeros of trace(lam/gamma) in a negative window.

    The scan grid is geometric in |lam| with ratio gamma^(1/points_per_octave),
    matching how the roots accumulate under gamma-scaling; pairs of
    same-sign grid values with an unusually small dip are refined by
    golden section and reported as possible missed roots when no sign
    change is found.  The grid density is the caller's accuracy knob for
    deep windows.

    Unless oracle_check_depth is None, the harvest is certified against
    the independent string-oracle count; a shortfall triggers automatic
    rescans at doubled resolution (a persistent mismatch is recorded as a
    warning, since very deep windows can exceed what the oracle depth
    resolves).
    """
    lo, hi = window
    if not (lo < hi <= 0.0):
        raise WindowError(f"root window must satisfy lo < hi <= 0, got [{lo}, {hi}]")
    if oracle_check_depth is not None:
        want = expected_root_count(params, window, depth=oracle_check_depth)
        rs = find_root_set(
            params, window, points_per_octave, rel_tol, dip_fraction, oracle_check_depth=None
        )
        attempts = 0
        ppo = points_per_octave
        while len(rs.roots) < want and attempts < 3:
            ppo *= 2
            attempts += 1
            rs = find_root_set(
                params, window, ppo, rel_tol, dip_fraction, oracle_check_depth=None
            )
        if len(rs.roots) != want:
            msg = (
                f"root harvest ({len(rs.roots)}) disagrees with the oracle count "
                f"({want}) on [{lo}, {hi}] after {attempts} rescans"
            )
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            rs = RootSet(
                params=rs.params,
                roots=rs.roots,
                brackets=rs.brackets,
                window=rs.window,
                tol=rs.tol,
                warnings=rs.warnings + (msg,),
            )
        return rs

    def g(lam: float) -> float:
        return float(trace(lam / params.gamma, params).real)

    # no roots near zero: the trace at 0 is 1 + 1/delta and its slope is
    # bounded, giving a safe inner exclusion radius
    t0 = 1.0 + 1.0 / params.delta
    slope = abs((g(-1e-3) - t0) / 1e-3)
    inner = min(abs(hi) if hi < 0.0 else math.inf, 0.05 * t0 / max(slope, 1e-12))
    inner = max(inner, abs(lo) * 1e-15)
    ratio = params.gamma ** (1.0 / points_per_octave)
    n_steps = max(2, int(math.ceil(math.log(abs(lo) / inner) / math.log(ratio))) + 1)
    mags = inner * ratio ** np.arange(n_steps + 1)
    mags = mags[mags <= abs(lo) * (1.0 + 1e-12)]
    grid = -mags[::-1]  # ascending from lo toward 0
    vals = np.array([g(x) for x in grid])

    roots: list[float] = []
    brackets: list[tuple[float, float]] = []
    notes: list[str] = []
    scale = np.maximum.accumulate(np.abs(vals)[::-1])[::-1]
    for i in range(len(grid) - 1):
        a, b = float(grid[i]), float(grid[i + 1])
        fa, fb = float(vals[i]), float(vals[i + 1])
        if fa == 0.0:
            roots.append(a)
            eps = rel_tol * max(1.0, abs(a))
            brackets.append((a - eps, a + eps))
            continue
        if (fa < 0.0) != (fb < 0.0):
            root, brk = _bisect_root(g, a, b, fa, rel_tol)
            roots.append(root)
            brackets.append(brk)
        elif min(abs(fa), abs(fb)) < dip_fraction * scale[i]:
            x_min, f_min = _golden_min(g, a, b)
            if (f_min < 0.0) != (fa < 0.0):
                r1, b1 = _bisect_root(g, a, x_min, fa, rel_tol)
                r2, b2 = _bisect_root(g, x_min, b, f_min, rel_tol)
                roots.extend([r1, r2])
                brackets.extend([b1, b2])
            elif abs(f_min) < dip_fraction**2 * scale[i]:
                notes.append(
                    f"possible missed root near lam={x_min:.6g} (|trace|={abs(f_min):.2e})"
                )
    order = np.argsort(roots)[::-1]  # decreasing lam: shallowest first
    roots_sorted = tuple(float(roots[i]) for i in order)
    brackets_sorted = tuple(brackets[i] for i in order)
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return RootSet(
        params=params,
        roots=roots_sorted,
        brackets=brackets_sorted,
        window=(lo, hi),
        tol=rel_tol,
        warnings=tuple(notes),
    )


@dataclass(frozen=True, order=True)
class EigenLabel:
    """Ladder label: eigenvalue gamma^p * root_k."""

    value: float
    k: int
    p: int


def enumerate_eigenvalues(
    root_set: RootSet,
    level: int,
    window: tuple[float, float],
    boundary: str = "neumann",
) -> list[EigenLabel]:
    """Labeled level-n spectrum in a window: {gamma^p * root_k : p >= -n}.

    The zero mode is appended for Neumann whenever the window closure
    touches 0.  Raises WindowError when the searched root window is too
    shallow to cover gamma^level-rescaled requests.
    """
    if level < 0:
        raise DomainError("level must be nonnegative")
    lo, hi = window
    if not (lo < hi <= 0.0) and not (lo < 0.0 <= hi):
        raise WindowError(f"window must be negative-reaching, got [{lo}, {hi}]")
    params = root_set.params
    gamma = params.gamma
    needed = gamma**level * abs(lo)
    if abs(root_set.window[0]) < needed * (1.0 - 1e-12):
        raise WindowError(
            f"root set searched to {root_set.window[0]:.6g} but level {level} over "
            f"[{lo}, {hi}) needs coverage to {-needed:.6g}"
        )
    labels: list[EigenLabel] = []
    if root_set.roots:
        shallowest = abs(root_set.roots[0])
        p = -level
        # once gamma^p scales even the shallowest root below the window
        # bottom, no deeper p can contribute
        while gamma**p * shallowest <= abs(lo):
            factor = gamma**p
            for k, r in enumerate(root_set.roots, start=1):
                v = factor * r
                if lo <= v < hi:
                    labels.append(EigenLabel(value=v, k=k, p=p))
            p += 1
    if boundary.lower() == "neumann" and hi >= 0.0:
        labels.append(EigenLabel(value=0.0, k=0, p=0))
    labels.sort(key=lambda e: e.value, reverse=True)
    return labels


class IdsMethod(Enum):
    ORACLE_INERTIA = "oracle_inertia"
    LABEL_COUNT = "label_count"


@dataclass(frozen=True)
class IdsEstimate:
    level: int
    window: tuple[float, float]
    count: int
    normalized: float
    method: IdsMethod
    boundary: str


def ids(
    params: ModelParams,
    prefix: Sequence[int],
    level: int,
    lam_values: Sequence[float],
    boundary: str = "neumann",
    depth_extra: int = 6,
    method: IdsMethod = IdsMethod.ORACLE_INERTIA,
    root_set: RootSet | None = None,
) -> list[IdsEstimate]:
    """Integrated density of states estimates at a blow-up level.

    For each requested lam < 0 the count over [lam, 0) of the level-n
    operator is normalized by 2^n.  The oracle path Sturm-counts the
    discretized operator (subdivision depth level+depth_extra); the label
    path counts ladder points and needs a root set searched deep enough.
    """
    symbols = tuple(prefix)
    if level > len(symbols):
        raise DomainError(f"level {level} exceeds prefix length {len(symbols)}")
    lams = [float(v) for v in lam_values]
    for v in lams:
        if v >= 0.0:
            raise DomainError("ids expects strictly negative window bottoms")
    out: list[IdsEstimate] = []
    if method is IdsMethod.ORACLE_INERTIA:
        string = string_oracle.discretize(params, symbols[:level], depth=level + depth_extra)
        op = string_oracle.build_operator(string, boundary)
        for v in lams:
            count = string_oracle.count_in_window(op, (v, 0.0))
            out.append(
                IdsEstimate(
                    level=level,
                    window=(v, 0.0),
                    count=count,
                    normalized=count / 2.0**level,
                    method=method,
                    boundary=boundary,
                )
            )
        return out
    if root_set is None:
        raise PreconditionError("label_count method needs a root set")
    for v in lams:
        labels = enumerate_eigenvalues(root_set, level, (v, 0.0), boundary)
        count = sum(1 for e in labels if e.value < 0.0)
        out.append(
            IdsEstimate(
                level=level,
                window=(v, 0.0),
                count=count,
                normalized=count / 2.0**level,
                method=method,
                boundary=boundary,
            )
        )
    return out


@dataclass(frozen=True)
class LyapunovSample:
    lam: float
    zeta: float
    orbit: OrbitSummary


def lyapunov(
    lam: float,
    params: ModelParams,
    max_iter: int = renorm_map.DEFAULT_MAX_ITER,
    escape_radius: float = renorm_map.DEFAULT_ESCAPE_RADIUS,
) -> LyapunovSample:
    """Lyapunov exponent of the transfer cocycle: Green function on the curve."""
    pt = curve_point(lam, params)
    orb = green(
        (pt.a.real, pt.d.real),
        params,
        max_iter=max_iter,
        escape_radius=escape_radius,
        stop_on_convergence=True,
    )
    return LyapunovSample(lam=float(lam), zeta=orb.green_estimate, orbit=orb)


def escape_time(lam: float, params: ModelParams, budget: int = 60, escape_radius: float = renorm_map.DEFAULT_ESCAPE_RADIUS) -> int:
    """Steps until the curve orbit leaves the escape radius (budget+1 if never)."""
    pt = curve_point(lam, params)
    orb = green(
        (pt.a.real, pt.d.real),
        params,
        max_iter=budget,
        escape_radius=escape_radius,
        stop_on_convergence=False,
    )
    return orb.escape_step if orb.escape_step is not None else budget + 1


def refine_toward_support(
    lam_seed: float,
    params: ModelParams,
    half_width: float | None = None,
    target_steps: int = 40,
    max_rounds: int = 60,
) -> float:
    """Move a spectral parameter onto the support of the density of states.

    The support is exactly the set of bounded curve orbits, so escape time
    diverges there; iterated bracket shrinking around the escape-time
    argmax converges to a support point whenever the bracket holds one.
    Finite-level eigenvalues (whose own orbits must escape, carrying
    2^p-scaled positive exponents) make good seeds.
    """
    width = half_width if half_width is not None else 1e-4 * max(abs(lam_seed), 1.0)
    lo, hi = lam_seed - width, min(lam_seed + width, -1e-12)
    budget = target_steps + 10
    best = lam_seed
    for _ in range(max_rounds):
        xs = np.linspace(lo, hi, 7)
        times = [escape_time(float(x), params, budget) for x in xs]
        j = int(np.argmax(times))
        best = float(xs[j])
        if times[j] > target_steps and hi - lo < 1e-13 * abs(best):
            break
        lo = float(xs[max(j - 1, 0)])
        hi = float(xs[min(j + 1, len(xs) - 1)])
        if hi - lo <= abs(best) * 1e-15:
            break
    return best


class Classification(Enum):
    IN_SUPPORT = "in_support"
    GAP = "gap"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class EscapeConfig:
    """Escape policy for classification.

    Verdicts whose peak orbit size lands within guard_factor of the escape
    radius are rerun at recheck_factor times the iteration budget before
    Undecided is returned.
    """

    max_iter: int = renorm_map.DEFAULT_MAX_ITER
    escape_radius: float = renorm_map.DEFAULT_ESCAPE_RADIUS
    guard_factor: float = 10.0
    recheck_factor: int = 4


@dataclass(frozen=True)
class ClassifyResult:
    lam: float
    verdict: Classification
    orbit: OrbitSummary


def classify(lam: float, params: ModelParams, config: EscapeConfig | None = None) -> ClassifyResult:
    """Gap / in-support verdict for a real spectral parameter.

    Gap when the curve orbit escapes, in-support when it stays bounded
    through the full budget; near-threshold peaks trigger the longer
    recheck and may come back Undecided.
    """
    cfg = config or EscapeConfig()
    pt = curve_point(lam, params)
    log_R = math.log(cfg.escape_radius)
    log_guard = math.log(cfg.guard_factor)

    def run(budget: int) -> OrbitSummary:
        return green(
            (pt.a.real, pt.d.real),
            params,
            max_iter=budget,
            escape_radius=cfg.escape_radius,
            stop_on_convergence=True,
        )

    orb = run(cfg.max_iter)
    if orb.escape_step is not None:
        if orb.peak_affine_log_norm > log_R + log_guard:
            return ClassifyResult(lam, Classification.GAP, orb)
        orb2 = run(cfg.recheck_factor * cfg.max_iter)
        if orb2.escape_step is not None and orb2.peak_affine_log_norm > log_R + log_guard:
            return ClassifyResult(lam, Classification.GAP, orb2)
        return ClassifyResult(lam, Classification.UNDECIDED, orb2)
    if orb.peak_affine_log_norm < log_R - log_guard:
        return ClassifyResult(lam, Classification.IN_SUPPORT, orb)
    orb2 = run(cfg.recheck_factor * cfg.max_iter)
    if orb2.escape_step is None:
        if orb2.peak_affine_log_norm < log_R - log_guard:
            return ClassifyResult(lam, Classification.IN_SUPPORT, orb2)
        return ClassifyResult(lam, Classification.UNDECIDED, orb2)
    if orb2.peak_affine_log_norm > log_R + log_guard:
        return ClassifyResult(lam, Classification.GAP, orb2)
    return ClassifyResult(lam, Classification.UNDECIDED, orb2)
