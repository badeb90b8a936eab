"""Hot numerical loops, compiled with numba when available.

Every kernel is a plain sequential recurrence (transfer-matrix products,
Sturm pivot sweeps).  Factor order is fixed left-to-right so results do
not depend on evaluation scheduling.  No fastmath: bitwise determinism
matters for the reproducibility guarantees of the CLI.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


@njit(cache=True)
def transfer_product(pos, mas, lam, s, t):  # pragma: no cover - compiled
    """Product of gap and mass factors over masses in (s, t].

    Maps (f, f') at s to (f, f') at t for the equation d/dm d/dx f = lam f
    on a string with point masses `mas` at `pos`.  Returns the four matrix
    entries (a, b, c, d).
    """
    a = 1.0 + 0.0j
    b = 0.0 + 0.0j
    c = 0.0 + 0.0j
    d = 1.0 + 0.0j
    x = s
    for i in range(pos.shape[0]):
        p = pos[i]
        ell = p - x
        a = a + ell * c
        b = b + ell * d
        lw = lam * mas[i]
        c = c + lw * a
        d = d + lw * b
        x = p
    ell = t - x
    a = a + ell * c
    b = b + ell * d
    return a, b, c, d


@njit(cache=True)
def propagate_values(pos, mas, lam, s, t, f0, g0):  # pragma: no cover
    """Propagate one real solution over (s, t], recording f at each mass.

    Returns (values at masses, f(t), f'(t-)).
    """
    f = f0
    g = g0
    x = s
    out = np.empty(pos.shape[0], dtype=np.float64)
    for i in range(pos.shape[0]):
        p = pos[i]
        f = f + (p - x) * g
        out[i] = f
        g = g + lam * mas[i] * f
        x = p
    f = f + (t - x) * g
    return out, f, g


@njit(cache=True)
def sturm_count(diag, off, lam, pivot_floor):  # pragma: no cover
    """Number of eigenvalues of the symmetric tridiagonal below lam.

    Classic pivot-sign sweep of the shifted LDL^T factorization.  Returns
    (count, smallest pivot magnitude seen); a pivot below pivot_floor
    signals the caller to jitter lam and retry.
    """
    n = diag.shape[0]
    count = 0
    min_abs = np.inf
    q = diag[0] - lam
    aq = abs(q)
    if aq < min_abs:
        min_abs = aq
    if q < 0.0:
        count += 1
    for i in range(1, n):
        if abs(q) < pivot_floor:
            return -1, min_abs
        q = (diag[i] - lam) - (off[i - 1] * off[i - 1]) / q
        aq = abs(q)
        if aq < min_abs:
            min_abs = aq
        if q < 0.0:
            count += 1
    return count, min_abs


def warmup() -> None:
    """Trigger compilation of all kernels on tiny inputs."""
    pos = np.array([0.5])
    mas = np.array([1.0])
    transfer_product(pos, mas, -1.0 + 0.0j, 0.0, 1.0)
    propagate_values(pos, mas, -1.0, 0.0, 1.0, 1.0, 0.0)
    sturm_count(np.array([-1.0, -2.0]), np.array([0.5]), -1.5, 1e-300)
