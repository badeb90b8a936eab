import math

import numpy as np
import pytest

from fractalstring.errors import WindowError
from fractalstring.model import derive_params
from fractalstring.spectral import (
    Classification,
    EscapeConfig,
    IdsMethod,
    classify,
    enumerate_eigenvalues,
    ids,
    lyapunov,
)
from fractalstring.string_oracle import build_operator, discretize, eigen_solve


def test_roots_half_closed_form(params_half, root_set_for):
    rs = root_set_for(params_half, -4200.0)
    assert len(rs) >= 10
    for k, r in enumerate(rs.roots, start=1):
        want = -((2 * k - 1) ** 2) * math.pi**2
        if abs(want) > 4200.0:
            break
        assert r == pytest.approx(want, rel=1e-8)
    assert all(r < 0 for r in rs.roots)


def test_roots_have_certified_brackets(params_two_thirds, root_set_for):
    rs = root_set_for(params_two_thirds)
    assert len(rs.roots) == len(rs.brackets)
    for r, (lo, hi) in zip(rs.roots, rs.brackets):
        assert lo <= r <= hi
        assert hi - lo <= 1e-10 * abs(r)


def test_roots_begetting_property(params_two_thirds, root_set_for):
    # every root has a companion in (gamma^2 r, gamma r); this is the
    # crossing argument, not a statement about adjacent roots
    rs = root_set_for(params_two_thirds, -2000.0)
    g = params_two_thirds.gamma
    for r in rs.roots:
        if g**2 * r < rs.window[0]:
            continue
        assert any(g**2 * r < other < g * r for other in rs.roots)


def test_expected_root_count_closed_form(params_half):
    # Dirichlet-count differencing: odd-square ladder points below 4200/pi^2
    from fractalstring.spectral import expected_root_count

    assert expected_root_count(params_half, (-4200.0, -0.5)) == 10
    assert expected_root_count(params_half, (-50.0, -0.5)) == 1  # only -pi^2
    assert expected_root_count(params_half, (-100.0, -0.5)) == 2  # -pi^2, -9 pi^2


def test_coarse_scan_self_heals_against_oracle(params_two_thirds):
    # two of the four roots in this window share a grid cell at coarse
    # resolution; the oracle count certification must trigger rescans
    from fractalstring.spectral import find_root_set

    rs = find_root_set(params_two_thirds, (-700.0, -0.5), points_per_octave=2)
    assert len(rs.roots) == 4
    assert rs.warnings == ()


def test_roots_mirror_alpha(root_set_for):
    ra = root_set_for(derive_params(1.0 / 3.0)).roots
    rb = root_set_for(derive_params(2.0 / 3.0)).roots
    assert len(ra) == len(rb)
    for x, y in zip(ra, rb):
        assert x == pytest.approx(y, rel=1e-9)


def test_enumerate_half_level_zero(params_half, root_set_for):
    rs = root_set_for(params_half, -4200.0)
    labels = enumerate_eigenvalues(rs, 0, (-100.0, 0.0), "neumann")
    values = [e.value for e in labels]
    want = [0.0] + [-(k**2) * math.pi**2 for k in (1, 2, 3)]
    assert len(values) == 4
    for got, expect in zip(sorted(values, reverse=True), want):
        assert got == pytest.approx(expect, rel=1e-9, abs=1e-12)


def test_enumerate_label_scaling_identity(params_two_thirds, root_set_for):
    # spec(level n+1) in W equals gamma^{-1} spec(level n) in gamma*W,
    # exactly at the level of labels
    p = params_two_thirds
    rs = root_set_for(p, -3000.0)
    W = (-12.0, -0.8)
    lhs = [
        e for e in enumerate_eigenvalues(rs, 3, W, "dirichlet")
    ]
    rhs = [
        e
        for e in enumerate_eigenvalues(rs, 2, (W[0] * p.gamma, W[1] * p.gamma), "dirichlet")
    ]
    assert len(lhs) == len(rhs)
    for a, b in zip(lhs, rhs):
        assert a.value == pytest.approx(b.value / p.gamma, rel=1e-12)
        assert (a.k, a.p) == (b.k, b.p - 1)


def test_enumerate_insufficient_window(params_half, root_set_for):
    rs = root_set_for(params_half)  # searched to -600 only
    with pytest.raises(WindowError):
        enumerate_eigenvalues(rs, 4, (-100.0, 0.0), "neumann")


def test_enumerate_neumann_zero_mode(params_half, root_set_for):
    rs = root_set_for(params_half)
    with_zero = enumerate_eigenvalues(rs, 0, (-50.0, 0.0), "neumann")
    assert with_zero[0].value == 0.0 and with_zero[0].k == 0
    dirichlet = enumerate_eigenvalues(rs, 0, (-50.0, 0.0), "dirichlet")
    assert all(e.value < 0 for e in dirichlet)


def test_ladder_matches_oracle_level_two(params_two_thirds, root_set_for):
    p = params_two_thirds
    level = 2
    window = (-30.0, -0.4)
    rs = root_set_for(p, p.gamma**level * window[0] * 1.1)
    labels = [e for e in enumerate_eigenvalues(rs, level, window, "neumann") if e.value < 0]
    op = build_operator(discretize(p, (1,) * level, depth=level + 10), "neumann")
    oracle = eigen_solve(op, window).values
    assert len(oracle) == len(labels)
    ladder = np.array(sorted(e.value for e in labels))
    assert np.allclose(ladder, oracle, rtol=5e-4)


def test_ids_weyl_law_moderate_level(params_half):
    # at alpha = 1/2 the normalized count over [-R, 0) tends to sqrt(R)/pi
    level = 8
    for R in (10.0, 100.0):
        est = ids(params_half, (1,) * level, level, [-R], depth_extra=6)[0]
        assert est.normalized == pytest.approx(math.sqrt(R) / math.pi, rel=0.03)
        assert est.method is IdsMethod.ORACLE_INERTIA


def test_ids_boundary_condition_gap(params_half):
    level = 8
    for R in (7.0, 80.0):
        n = ids(params_half, (1,) * level, level, [-R], boundary="neumann")[0]
        d = ids(params_half, (1,) * level, level, [-R], boundary="dirichlet")[0]
        assert abs(n.normalized - d.normalized) <= 2.0 * 2.0**-level


def test_ids_label_count_matches_oracle_small_level(params_two_thirds, root_set_for):
    p = params_two_thirds
    level = 2
    rs = root_set_for(p, -3000.0)
    for lam in (-8.0, -20.0):
        lab = ids(p, (1,) * level, level, [lam], method=IdsMethod.LABEL_COUNT, root_set=rs)[0]
        orc = ids(p, (1,) * level, level, [lam], depth_extra=10)[0]
        assert lab.count == orc.count


def test_ids_monotone_in_window(params_two_thirds):
    ests = ids(params_two_thirds, (1,) * 6, 6, [-2.0, -10.0, -50.0])
    assert ests[0].normalized <= ests[1].normalized <= ests[2].normalized


def test_lyapunov_zero_at_origin(params_two_thirds):
    assert lyapunov(0.0, params_two_thirds).zeta <= 1e-9


def test_lyapunov_positive_on_ladder(params_two_thirds, root_set_for):
    p = params_two_thirds
    rs = root_set_for(p)
    # the first ladder point maps straight to the collapsed image point,
    # whose Green value is exactly log(delta)
    z = lyapunov(rs.root(1), p)
    assert z.zeta == pytest.approx(math.log(p.delta), rel=1e-6)
    for pp in (-2, 1):
        zz = lyapunov(p.gamma**pp * rs.root(1), p)
        assert zz.zeta == pytest.approx(2.0**pp * math.log(p.delta), rel=1e-5)
        assert zz.zeta > 0


def test_lyapunov_halving_and_doubling(params_third):
    p = params_third
    for lam in (-1.7, -6.3, -21.0):
        z1 = lyapunov(lam, p).zeta
        z2 = lyapunov(p.gamma * lam, p).zeta
        assert abs(z2 - 2.0 * z1) < 1e-6
        assert z1 >= -1e-9


def test_classify_lebesgue_everything_in_support(params_half):
    for lam in (-0.5, -9.0, -100.0, -900.0):
        res = classify(lam, params_half)
        assert res.verdict is Classification.IN_SUPPORT


def test_classify_positive_reals_are_gaps(params_two_thirds):
    for lam in (0.05, 0.4, 2.0):
        res = classify(lam, params_two_thirds)
        assert res.verdict is Classification.GAP


def test_classify_ladder_points_are_gaps(params_two_thirds, root_set_for):
    p = params_two_thirds
    rs = root_set_for(p)
    cfg = EscapeConfig(max_iter=10, escape_radius=1e8)
    for k in (1, 2):
        for pp in (-1, 0, 1):
            res = classify(p.gamma**pp * rs.root(k), p, cfg)
            assert res.verdict is Classification.GAP


def test_classify_guard_band_returns_undecided(params_half):
    # at alpha = 1/2, lam = -4 the orbit oscillates with peak near sqrt(2);
    # an escape radius of 2 puts that peak inside the factor-10 guard band
    # on the bounded side, which must come back Undecided after the recheck
    res = classify(-4.0, params_half, EscapeConfig(max_iter=50, escape_radius=2.0))
    assert res.verdict is Classification.UNDECIDED


def test_classify_support_neighbors_of_oracle_eigenvalue(params_two_thirds):
    # a deep eigenvalue of a blown-up oracle sits close to the support
    p = params_two_thirds
    op = build_operator(discretize(p, (1,) * 10, depth=16), "neumann")
    vals = eigen_solve(op, (-1.001, -0.93)).values
    assert len(vals) > 0
    cfg = EscapeConfig(max_iter=10, escape_radius=1e8)
    res = classify(float(vals[0]), p, cfg)
    assert res.verdict is Classification.IN_SUPPORT
