import math

import numpy as np
import pytest

from fractalstring.errors import DomainError
from fractalstring.model import derive_params
from fractalstring.string_oracle import (
    DiscreteString,
    build_operator,
    count_in_window,
    discretize,
    eigen_count,
    eigen_full,
    eigen_solve,
    propagate,
    propagate_with_values,
)


def test_discretize_lebesgue_level_one():
    p = derive_params(0.5)
    s = discretize(p, (), depth=1)
    assert np.allclose(s.masses, [0.5, 0.5])
    assert np.allclose(s.positions, [0.25, 0.75])


def test_discretize_third_level_one():
    p = derive_params(1.0 / 3.0)
    s = discretize(p, (), depth=1)
    # cells [0, 1/3] and [1/3, 1] carry weights 2/3 and 1/3
    assert np.allclose(s.masses, [2.0 / 3.0, 1.0 / 3.0])
    assert np.allclose(s.positions, [1.0 / 6.0, 2.0 / 3.0])


def test_discretize_depth_zero_single_mass():
    p = derive_params(0.7)
    s = discretize(p, (), depth=0)
    assert len(s) == 1
    assert s.masses[0] == pytest.approx(1.0)
    assert s.positions[0] == pytest.approx(0.5)


def test_discretize_total_mass_with_blowup():
    p = derive_params(2.0 / 3.0)
    s = discretize(p, (1, 2, 1), depth=6)
    want = (1.0 / p.w1) * (1.0 / p.w2) * (1.0 / p.w1)
    assert s.total_mass == pytest.approx(want, rel=1e-12)
    assert np.all(np.diff(s.positions) > 0)
    assert s.positions[0] > s.left and s.positions[-1] < s.right


def test_left_scheme_keeps_masses():
    p = derive_params(0.4)
    s = discretize(p, (), depth=5, scheme="left")
    assert s.total_mass == pytest.approx(1.0, rel=1e-13)
    with pytest.raises(DomainError):
        build_operator(s, "dirichlet")  # first mass sits on the boundary


def test_propagate_free_motion():
    p = derive_params(0.35)
    s = discretize(p, (), depth=6)
    m = propagate(s, 0.0, 0.0, 1.0)
    assert np.allclose(m, [[1.0, 1.0], [0.0, 1.0]], atol=1e-14)
    m2 = propagate(s, 0.0, 0.125, 0.625)
    assert np.allclose(m2, [[1.0, 0.5], [0.0, 1.0]], atol=1e-14)


def test_propagate_single_mass_closed_form():
    # gap, mass, gap product by hand for one unit mass at 1/2
    s = DiscreteString(
        positions=np.array([0.5]),
        masses=np.array([1.0]),
        left=0.0,
        right=1.0,
        depth=0,
    )
    for lam in (-3.0, -1.0, 2.5):
        m = propagate(s, lam, 0.0, 1.0)
        expect = np.array([[1 + lam / 2, 1 + lam / 4], [lam, 1 + lam / 2]])
        assert np.allclose(m, expect, atol=1e-14)


def test_propagate_segment_composition():
    p = derive_params(2.0 / 3.0)
    s = discretize(p, (), depth=8)
    lam = -17.3
    whole = propagate(s, lam, 0.0, 1.0)
    split = propagate(s, lam, 0.5, 1.0) @ propagate(s, lam, 0.0, 0.5)
    assert np.allclose(whole, split, atol=1e-12)


def test_propagate_determinant_unimodular():
    p = derive_params(1.0 / 3.0)
    s = discretize(p, (), depth=14)
    for lam in (-1e4, -40.0, complex(-2.0, 3.0)):
        m = propagate(s, lam, 0.0, 1.0)
        assert abs(np.linalg.det(m) - 1.0) < 1e-10


def test_build_operator_neumann_two_masses():
    # two masses 1/2 at 1/4, 3/4: rows are 4(f_j - f_i), spectrum {0, -8}
    p = derive_params(0.5)
    op = build_operator(discretize(p, (), depth=1), "neumann")
    w, _ = eigen_full(op)
    assert np.allclose(np.sort(w), [-8.0, 0.0], atol=1e-12)


def test_build_operator_dirichlet_two_masses():
    # boundary links of length 1/4 add 8 on the diagonal: spectrum {-8, -16}
    p = derive_params(0.5)
    op = build_operator(discretize(p, (), depth=1), "dirichlet")
    w, _ = eigen_full(op)
    assert np.allclose(np.sort(w), [-16.0, -8.0], atol=1e-12)


def test_neumann_constant_zero_mode():
    p = derive_params(0.61)
    op = build_operator(discretize(p, (), depth=6), "neumann")
    w, funcs = eigen_full(op)
    j = int(np.argmax(w))
    assert w[j] == pytest.approx(0.0, abs=1e-10)
    v = funcs[:, j]
    assert np.ptp(v) < 1e-8  # constant vector
    assert np.all(w <= 1e-10)


def test_eigen_count_examples():
    p = derive_params(0.5)
    op = build_operator(discretize(p, (), depth=1), "neumann")
    assert eigen_count(op, -1.0) == 1  # only -8 lies below
    assert eigen_count(op, -100.0) == 0
    assert eigen_count(op, 1.0) == 2
    assert eigen_count(op, op.gershgorin_floor()) == 0


def test_eigen_count_monotone_and_additive():
    p = derive_params(2.0 / 3.0)
    op = build_operator(discretize(p, (), depth=7), "dirichlet")
    lams = np.linspace(-300.0, -0.01, 40)
    counts = [eigen_count(op, float(x)) for x in lams]
    assert all(b >= a for a, b in zip(counts, counts[1:]))
    assert count_in_window(op, (-300.0, -50.0)) + count_in_window(
        op, (-50.0, -0.01)
    ) == count_in_window(op, (-300.0, -0.01))


# Frozen regression: depth-10 midpoint strings reproduce the smallest
# nonzero Lebesgue eigenvalue -pi^2 to 3e-6 (first measurement 7.4e-7).
PI2_DEPTH10_TOL = 3e-6


def test_eigen_solve_neumann_near_pi_squared():
    p = derive_params(0.5)
    op = build_operator(discretize(p, (), depth=10), "neumann")
    res = eigen_solve(op, (-15.0, -5.0))
    assert len(res.values) == 1
    assert res.values[0] == pytest.approx(-math.pi**2, rel=PI2_DEPTH10_TOL)
    assert abs(res.values[0] + math.pi**2) < 0.05


def test_eigen_solve_dirichlet_ground_state():
    p = derive_params(0.5)
    op = build_operator(discretize(p, (), depth=10), "dirichlet")
    res = eigen_solve(op, (-15.0, -5.0))
    assert res.values[-1] == pytest.approx(-math.pi**2, rel=PI2_DEPTH10_TOL)


def test_eigen_solve_vectors_mass_orthonormal():
    p = derive_params(2.0 / 3.0)
    op = build_operator(discretize(p, (), depth=8), "neumann")
    # the spectrum here is sparse: (-150, -0.5) holds the first three points
    res = eigen_solve(op, (-150.0, -0.5), want_vectors=True)
    assert len(res.values) >= 2
    assert res.converged.all()
    m = op.masses
    for i in range(len(res.values)):
        vi = res.vectors[:, i]
        assert np.sum(m * vi * vi) == pytest.approx(1.0, rel=1e-9)
        for j in range(i):
            assert abs(np.sum(m * vi * res.vectors[:, j])) < 1e-7


def test_eigen_solve_matches_dense_path():
    p = derive_params(1.0 / 3.0)
    op = build_operator(discretize(p, (), depth=7), "neumann")
    dense, _ = eigen_full(op)
    window = (-60.0, -0.1)
    sel = np.sort(dense[(dense >= window[0]) & (dense < window[1])])
    res = eigen_solve(op, window)
    assert np.allclose(res.values, sel, rtol=1e-9, atol=1e-9)


def test_blowup_by_twos_mirrors_blowup_by_ones():
    # reflecting the interval swaps the roles of the two contractions, so
    # the level-n operator blown up with 2-symbols at alpha has exactly
    # the spectrum of the one blown up with 1-symbols at 1 - alpha
    level, depth = 2, 8
    window = (-60.0, -0.1)
    a = derive_params(1.0 / 3.0)
    b = derive_params(2.0 / 3.0)
    op_twos = build_operator(discretize(a, (2,) * level, depth=level + depth), "neumann")
    op_ones = build_operator(discretize(b, (1,) * level, depth=level + depth), "neumann")
    va = eigen_solve(op_twos, window).values
    vb = eigen_solve(op_ones, window).values
    assert len(va) == len(vb) > 0
    assert np.allclose(va, vb, rtol=1e-9)


def test_string_herglotz_sign():
    p = derive_params(0.45)
    s = discretize(p, (), depth=9)
    for lam in (complex(-5.0, 1.0), complex(-20.0, 0.3), complex(2.0, 4.0)):
        m = propagate(s, lam, 0.0, 1.0)
        assert (np.conj(m[0, 0]) * m[1, 0]).imag > 0.0


def test_propagate_with_values_matches_matrix():
    p = derive_params(2.0 / 3.0)
    s = discretize(p, (), depth=6)
    lam = -11.0
    vals, (f1, g1) = propagate_with_values(s, lam, 0.0, 1.0, (1.0, 0.0))
    m = propagate(s, lam, 0.0, 1.0)
    assert f1 == pytest.approx(float(m[0, 0]), rel=1e-12)
    assert g1 == pytest.approx(float(m[1, 0]), rel=1e-12)
    assert len(vals) == len(s)
