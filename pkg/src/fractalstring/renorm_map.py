"""The planar renormalization map and its projective dynamics.

The quadratic map

    f(x, y) = ( x*(x + y/delta) - 1/delta,  delta*y*(x + y/delta) - delta )

extends to the projective plane as [x, y, z] -> [x(x + y/delta) - z^2/delta,
delta*y(x + y/delta) - delta*z^2, z^2], undefined exactly at the
indeterminacy point [1, -delta, 0].  The line x + y/delta = 0 collapses to
a single point whose forward orbit lands on the invariant hyperbola
xy = z^2, where the map is plain coordinate squaring.  Orbit growth is
doubly exponential, so all orbit bookkeeping here lives in signed
log-magnitude coordinates; escape to infinity is a verdict, never an
arithmetic failure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IndeterminacyError
from .model import ModelParams

NEAR_INDETERMINACY_TOL = 1e-10
DEFAULT_ESCAPE_RADIUS = 1e8
DEFAULT_MAX_ITER = 200
GREEN_CONVERGE_TOL = 1e-12


def f_affine(p: tuple[complex, complex], params: ModelParams) -> tuple[complex, complex]:
    """One step of the planar map in the affine chart.

    Overflow to inf is legitimate here (it reports escape); callers that
    need controlled deep orbits use the log-coordinate engine instead.
    """
    x, y = p
    s = x + y / params.delta
    return x * s - 1.0 / params.delta, params.delta * y * s - params.delta


def hyperbola_form(triple, params: ModelParams | None = None) -> float:
    """The quadric r(x, y, z) = xy - z^2 cutting out the invariant hyperbola."""
    x, y, z = triple
    return x * y - z * z


def line_form(triple, params: ModelParams) -> float:
    """The linear form alpha*(x + y/delta) vanishing on the collapsed line."""
    x, y, z = triple
    return params.alpha * (x + y / params.delta)


def indeterminacy_point(params: ModelParams) -> np.ndarray:
    return _normalize(np.array([1.0, -params.delta, 0.0]))


def _normalize(triple: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(triple)))
    if triple[idx] == 0:
        raise DomainError("projective triple cannot be all zero")
    return triple / triple[idx]


def projective_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Sine of the angle between two projective representatives."""
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(np.cross(a, b)) / (na * nb))


@dataclass(frozen=True)
class ProjectivePoint:
    """A point of the projective plane, normalized to unit max component.

    Flags record incidence with the distinguished loci at the tolerance
    used by the dynamics: the collapsed line D, the invariant hyperbola C,
    the closed cones r >= 0 / r <= 0, and the indeterminacy point.
    """

    triple: np.ndarray
    on_D: bool
    on_C: bool
    in_K_plus: bool
    in_K_minus: bool
    is_indeterminacy: bool

    @classmethod
    def from_triple(
        cls, triple, params: ModelParams, tol: float = 1e-12
    ) -> "ProjectivePoint":
        t = _normalize(np.asarray(triple, dtype=float))
        scale = float(np.dot(t, t))
        r = hyperbola_form(t)
        p = line_form(t, params)
        ind = projective_distance(t, np.array([1.0, -params.delta, 0.0])) <= tol
        return cls(
            triple=t,
            on_D=abs(p) <= tol * scale,
            on_C=abs(r) <= tol * scale,
            in_K_plus=r >= -tol * scale,
            in_K_minus=r <= tol * scale,
            is_indeterminacy=bool(ind),
        )


def R_homogeneous(triple, params: ModelParams) -> np.ndarray:
    """Homogeneous degree-2 lift applied to a triple, renormalized.

    Raises IndeterminacyError on the indeterminacy ray; warns when the
    input is within NEAR_INDETERMINACY_TOL of it (the image is then
    dominated by rounding).
    """
    t = np.asarray(triple, dtype=float)
    ind = np.array([1.0, -params.delta, 0.0])
    dist = projective_distance(t, ind)
    x, y, z = t
    s = x + y / params.delta
    image = np.array(
        [
            x * s - z * z / params.delta,
            params.delta * y * s - params.delta * z * z,
            z * z,
        ]
    )
    if not np.any(image != 0.0):
        raise IndeterminacyError("map evaluated at the indeterminacy point")
    if dist < NEAR_INDETERMINACY_TOL:
        warnings.warn(
            f"projective map evaluated {dist:.2e} from the indeterminacy point",
            RuntimeWarning,
            stacklevel=2,
        )
    return _normalize(image)


def infinity_restriction(xy: tuple[float, float], params: ModelParams) -> tuple[float, float]:
    """Action on the line at infinity: [x, y, 0] -> [x, delta*y, 0]."""
    return xy[0], params.delta * xy[1]


def infinity_preimage(xy: tuple[float, float], params: ModelParams) -> tuple[float, float]:
    return xy[0], xy[1] / params.delta


# ---------------------------------------------------------------------------
# log-coordinate orbit engine
# ---------------------------------------------------------------------------


def _signed_lse(la: float, sa: float, lb: float, sb: float) -> tuple[float, float]:
    """log|a + b| and sign from signed log representations."""
    if sa == 0.0:
        return lb, sb
    if sb == 0.0:
        return la, sa
    m = la if la >= lb else lb
    v = sa * math.exp(la - m) + sb * math.exp(lb - m)
    if v == 0.0:
        return -math.inf, 0.0
    return m + math.log(abs(v)), math.copysign(1.0, v)


@dataclass
class LogTriple:
    """Signed log-magnitude homogeneous coordinates (scale-free)."""

    lmag: np.ndarray  # shape (3,), log magnitudes, -inf allowed
    sign: np.ndarray  # shape (3,), each -1, 0 or +1

    @classmethod
    def from_affine(cls, x: float, y: float) -> "LogTriple":
        return cls.from_triple((x, y, 1.0))

    @classmethod
    def from_triple(cls, triple) -> "LogTriple":
        t = np.asarray(triple, dtype=float)
        lmag = np.where(t != 0.0, np.log(np.abs(np.where(t != 0.0, t, 1.0))), -np.inf)
        return cls(lmag=lmag, sign=np.sign(t))

    def normalized(self) -> "LogTriple":
        m = float(np.max(self.lmag))
        return LogTriple(lmag=self.lmag - m, sign=self.sign.copy())

    def step(self, params: ModelParams) -> "LogTriple":
        """One application of the homogeneous lift in log coordinates."""
        (lx, ly, lz), (sx, sy, sz) = self.lmag, self.sign
        ldelta = math.log(params.delta)
        ls, ss = _signed_lse(lx, sx, ly - ldelta, sy)
        lX, sX = _signed_lse(lx + ls, sx * ss, 2.0 * lz - ldelta, -(sz * sz))
        lY, sY = _signed_lse(ldelta + ly + ls, sy * ss, ldelta + 2.0 * lz, -(sz * sz))
        out = LogTriple(
            lmag=np.array([lX, lY, 2.0 * lz]), sign=np.array([sX, sY, sz * sz])
        )
        return out.normalized()

    def square_on_hyperbola(self) -> "LogTriple":
        """Coordinate squaring, valid on the invariant hyperbola xy = z^2.

        Exact in log coordinates; used to continue orbits past the point
        where the collapsing coordinate falls below float cancellation.
        """
        return LogTriple(lmag=2.0 * self.lmag, sign=self.sign * self.sign).normalized()

    def affine_log_norm(self) -> float:
        """log of the euclidean norm of (x/z, y/z); inf when z -> 0."""
        lx, ly, lz = self.lmag
        if lx == -math.inf and ly == -math.inf:
            return -math.inf
        m = max(lx, ly)
        u = m + 0.5 * math.log(math.exp(2.0 * (lx - m)) + math.exp(2.0 * (ly - m)))
        if lz == -math.inf:
            return math.inf
        return u - lz

    def to_triple(self) -> np.ndarray:
        n = self.normalized()
        return n.sign * np.exp(n.lmag)


@dataclass(frozen=True)
class OrbitSummary:
    """What an orbit did: Green estimate, boundedness, escape bookkeeping."""

    green_estimate: float
    bounded: bool
    escape_step: int | None
    steps_run: int
    converged: bool
    min_distance_to_indeterminacy: float
    peak_affine_log_norm: float
    green_tolerance: float
    iterates: tuple[np.ndarray, ...] = field(default=(), repr=False)


def green(
    p: tuple[float, float],
    params: ModelParams,
    max_iter: int = DEFAULT_MAX_ITER,
    escape_radius: float = DEFAULT_ESCAPE_RADIUS,
    converge_tol: float = GREEN_CONVERGE_TOL,
    stop_on_convergence: bool = True,
    keep_iterates: int = 0,
) -> OrbitSummary:
    """Green function estimate along the forward orbit of an affine point.

    Accumulates G_n = 2^{-n} log(1 + |f^n(p)|) entirely in log space, so
    escaping orbits never overflow.  bounded is true exactly when the
    affine norm stayed at or below escape_radius for every step up to
    max_iter (escape never ends the iteration early; the estimate keeps
    converging in the squaring regime).
    """
    if max_iter < 1:
        raise DomainError("max_iter must be at least 1")
    lt = LogTriple.from_affine(*p)
    log_R = math.log(escape_radius)
    ind = indeterminacy_point(params)
    min_dist = math.inf
    escape_step: int | None = None
    peak_u = -math.inf
    g_prev = math.inf
    converged = False
    kept: list[np.ndarray] = []
    n_run = 0
    for n in range(max_iter + 1):
        u = lt.affine_log_norm()
        peak_u = max(peak_u, u)
        if escape_step is None and u > log_R:
            escape_step = n
        min_dist = min(min_dist, projective_distance(lt.to_triple(), ind))
        g = np.logaddexp(0.0, u) / 2.0**n
        if keep_iterates and n < keep_iterates:
            kept.append(lt.to_triple())
        converged = abs(g - g_prev) < converge_tol
        g_prev = g
        n_run = n
        # Early exit only once escape is already decided; a bounded verdict
        # requires the full iteration budget.
        if converged and stop_on_convergence and escape_step is not None:
            break
        if n < max_iter:
            lt = lt.step(params)
    green_tol = np.logaddexp(0.0, log_R) / 2.0**n_run
    return OrbitSummary(
        green_estimate=float(max(g_prev, 0.0)),
        bounded=escape_step is None,
        escape_step=escape_step,
        steps_run=n_run,
        converged=converged,
        min_distance_to_indeterminacy=float(min_dist),
        peak_affine_log_norm=float(peak_u),
        green_tolerance=float(green_tol),
        iterates=tuple(kept),
    )


# ---------------------------------------------------------------------------
# algebraic identities and cone bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlgebraicInvariants:
    r: float
    p: float
    r_of_image: float
    residual: float
    scale: float


def algebraic_invariants(triple, params: ModelParams) -> AlgebraicInvariants:
    """Evaluate r, the line form p and the pullback identity residual.

    The identity r(R(X)) = gamma * p(X)^2 * r(X) holds for every real
    triple; the residual is reported in absolute terms together with the
    natural scale of the two sides.
    """
    t = np.asarray(triple, dtype=float)
    x, y, z = t
    s = x + y / params.delta
    image = np.array(
        [x * s - z * z / params.delta, params.delta * y * s - params.delta * z * z, z * z]
    )
    r_val = hyperbola_form(t)
    p_val = line_form(t, params)
    r_img = hyperbola_form(image)
    predicted = params.gamma * p_val * p_val * r_val
    # the natural rounding scale of both sides before their cancellations
    scale = max(
        abs(image[0] * image[1]) + image[2] ** 2,
        abs(predicted),
        1e-30,
    )
    return AlgebraicInvariants(
        r=float(r_val),
        p=float(p_val),
        r_of_image=float(r_img),
        residual=float(abs(r_img - predicted)),
        scale=float(scale),
    )


@dataclass(frozen=True)
class ConeReport:
    checked: int
    sign_violations: int
    worst_signed_change: float


def cone_checks(triples, params: ModelParams, tol: float = 1e-12) -> ConeReport:
    """Forward invariance of the cones r >= 0 and r <= 0 on real samples.

    For each sample the sign of r may move toward zero only within
    rounding; a strict sign flip is a violation.
    """
    violations = 0
    worst = 0.0
    count = 0
    for t in triples:
        inv = algebraic_invariants(t, params)
        count += 1
        scale = max(abs(inv.r), abs(inv.r_of_image), 1.0)
        if inv.r > tol * scale and inv.r_of_image < -tol * scale:
            violations += 1
            worst = min(worst, inv.r_of_image / scale)
        if inv.r < -tol * scale and inv.r_of_image > tol * scale:
            violations += 1
            worst = max(worst, inv.r_of_image / scale)
    return ConeReport(checked=count, sign_violations=violations, worst_signed_change=worst)


def collapsed_line_orbit_logs(params: ModelParams, n_max: int) -> list[dict]:
    """Forward orbit of the collapsed line in log coordinates.

    Step 1 is the single image point of the line; from step 2 on the orbit
    lies on the invariant hyperbola, where the generic log step is checked
    against exact coordinate squaring while both stay in float range and
    squaring alone carries the orbit beyond.  Returns one record per step
    with the affine log coordinates and the doubling-formula target.
    """
    ldelta = math.log(params.delta)
    # any affine point of the line: (1, -delta)
    lt = LogTriple.from_affine(1.0, -params.delta)
    records: list[dict] = []
    lt = lt.step(params)  # step 1: the collapsed image point
    records.append(
        {
            "n": 1,
            "log_x": lt.lmag[0] - lt.lmag[2],
            "log_y": lt.lmag[1] - lt.lmag[2],
            "sign_x": float(lt.sign[0]),
            "sign_y": float(lt.sign[1]),
            "target_log": -ldelta,
        }
    )
    generic = lt
    for n in range(2, n_max + 1):
        lt = lt.square_on_hyperbola()
        crosscheck = None
        # The collapsing coordinate is a difference of terms that agree to
        # delta^(2^n - 1); past e^8 of dynamic range the log-value ulp noise
        # swamps it, so the generic map is compared only inside that regime.
        if 2.0 ** (n - 1) * abs(ldelta) < 8.0:
            generic = generic.step(params)
            crosscheck = float(
                abs((generic.lmag[0] - generic.lmag[2]) - (lt.lmag[0] - lt.lmag[2]))
            )
        records.append(
            {
                "n": n,
                "log_x": lt.lmag[0] - lt.lmag[2],
                "log_y": lt.lmag[1] - lt.lmag[2],
                "sign_x": float(lt.sign[0]),
                "sign_y": float(lt.sign[1]),
                "target_log": 2.0 ** (n - 1) * ldelta,
                "generic_step_mismatch": crosscheck,
            }
        )
    return records


def hyperbola_expansion_samples(
    params: ModelParams, n_samples: int = 200, seed: int = 7, offset: float = 1e-3
) -> list[tuple[float, float]]:
    """Sampled expansion of |r| near the repelling hyperbola branch.

    Near the branch on the repelling side of the dynamics (|x| >= 1 for
    delta > 1, mirrored otherwise) the normalized |r| of the image
    dominates the normalized |r| of the point.  Returns (before, after)
    pairs of |r| on unit-sphere representatives.
    """
    rng = np.random.default_rng(seed)
    out = []
    swap = params.delta < 1.0
    for _ in range(n_samples):
        x = rng.uniform(1.0, 4.0) * rng.choice([-1.0, 1.0])
        y = 1.0 / x + offset * rng.uniform(-1.0, 1.0)
        z = 1.0
        t = np.array([y, x, z]) if swap else np.array([x, y, z])
        t_unit = t / np.linalg.norm(t)
        before = abs(hyperbola_form(t_unit))
        x1, y1, z1 = t
        s = x1 + y1 / params.delta
        img = np.array(
            [x1 * s - z1 * z1 / params.delta, params.delta * y1 * s - params.delta * z1 * z1, z1 * z1]
        )
        img_unit = img / np.linalg.norm(img)
        after = abs(hyperbola_form(img_unit))
        out.append((float(before), float(after)))
    return out
