"""Acceptance suite: one test per release criterion, at stated tolerances.

Each criterion prints one PASS/FAIL line (run with -s to see them all) and
asserts its runtime budget.  Frozen regression constants carry a comment
with the first measurement that fixed them.
"""

import json
import math
import time

import numpy as np
import pytest

from fractalstring import cli, halfline, propagator, renorm_map, spectral, string_oracle, verify
from fractalstring.model import derive_params

ALPHA_THIRD = 1.0 / 3.0
ALPHA_TWO_THIRDS = 2.0 / 3.0


def _report(num, name, ok, elapsed, limit, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:2d} {name}: {status} ({elapsed:.1f}s / limit {limit:.0f}s) {detail}")


@pytest.fixture(scope="module")
def support_params_two_thirds():
    """Ten deep-support spectral parameters at alpha = 2/3 (criterion 9)."""
    p = derive_params(ALPHA_TWO_THIRDS)
    return verify.sample_support_parameters(p, 10, min_escape=25)


def test_criterion_01_closed_form_spectrum():
    t0 = time.perf_counter()
    p = derive_params(0.5)
    window = (-100.0 * math.pi**2 * 1.001, 0.0)
    rs = spectral.find_root_set(p, (window[0] * 1.05, -0.5))
    labels = spectral.enumerate_eigenvalues(rs, 0, window, "neumann")
    ladder = sorted((e.value for e in labels), reverse=True)
    want = [0.0] + [-(k**2) * math.pi**2 for k in range(1, 11)]
    ladder_ok = len(ladder) == 11 and all(
        got == 0.0 if expect == 0.0 else abs(got - expect) <= 1e-8 * abs(expect)
        for got, expect in zip(ladder, want)
    )
    op = string_oracle.build_operator(
        string_oracle.discretize(p, (), depth=12), "neumann"
    )
    oracle = string_oracle.eigen_solve(op, (window[0], -1.0)).values
    oracle_ok = len(oracle) == 10 and all(
        abs(got - expect) <= 1e-2 * abs(expect)
        for got, expect in zip(sorted(oracle), sorted(want[1:]))
    )
    elapsed = time.perf_counter() - t0
    ok = ladder_ok and oracle_ok and elapsed < 10.0
    _report(1, "closed-form spectrum", ok, elapsed, 10,
            f"ladder<=1e-8: {ladder_ok}, oracle depth 12 <=1e-2: {oracle_ok}")
    assert ladder_ok and oracle_ok
    assert elapsed < 10.0


def test_criterion_02_cross_oracle_propagator():
    t0 = time.perf_counter()
    worst = 0.0
    for alpha in (ALPHA_THIRD, 0.5, ALPHA_TWO_THIRDS):
        p = derive_params(alpha)
        s = string_oracle.discretize(p, (), depth=14)
        for lam in np.linspace(-40.0, 0.0, 50):
            mat = string_oracle.propagate(s, float(lam), 0.0, 1.0)
            ent = propagator.entries(float(lam), p).matrix().real
            worst = max(worst, float(np.max(np.abs(mat - ent))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-3 and elapsed < 60.0
    _report(2, "cross-oracle propagator", ok, elapsed, 60, f"sup gap {worst:.2e} (tol 1e-3)")
    assert worst <= 1e-3
    assert elapsed < 60.0


def test_criterion_03_structural_identities(rng):
    t0 = time.perf_counter()
    alphas = (ALPHA_THIRD, 0.45, 0.5, ALPHA_TWO_THIRDS)
    worst_det = worst_cb = worst_semi = worst_green = worst_pullback = 0.0
    cone_violations = 0
    # determinant and c = lam*b on 1000+ parameters
    for alpha in alphas:
        p = derive_params(alpha)
        for lam in rng.uniform(-40.0, 0.0, size=256):
            e = propagator.entries(float(lam), p)
            worst_det = max(worst_det, abs(e.det() - 1.0))
            worst_cb = max(
                worst_cb, abs(e.c - lam * e.b) / (1.0 + abs(lam) * abs(e.b))
            )
    # curve equation residual on 1000+ parameters
    for alpha in alphas:
        p = derive_params(alpha)
        for lam in np.concatenate(
            [np.linspace(-50.0, -1e-3, 250), [-1e-6, -1e-8, 2e-7]]
        ):
            pt = propagator.curve_point(complex(lam), p)
            img = renorm_map.f_affine((pt.a, pt.d), p)
            nxt = propagator.curve_point(complex(lam) * p.gamma, p)
            scale = 1.0 + max(abs(nxt.a), abs(nxt.d))
            worst_semi = max(
                worst_semi, max(abs(img[0] - nxt.a), abs(img[1] - nxt.d)) / scale
            )
    # Green functional equation on 1000+ points
    for alpha in (ALPHA_THIRD, ALPHA_TWO_THIRDS):
        p = derive_params(alpha)
        for _ in range(512):
            pt = tuple(rng.uniform(-3.0, 3.0, size=2))
            g1 = renorm_map.green(pt, p, max_iter=70).green_estimate
            g2 = renorm_map.green(renorm_map.f_affine(pt, p), p, max_iter=70).green_estimate
            worst_green = max(worst_green, abs(g2 - 2.0 * g1))
    # pullback identity and cone invariance on 10^4 samples
    for alpha in alphas:
        p = derive_params(alpha)
        triples = rng.uniform(-10.0, 10.0, size=(2500, 3))
        for X in triples:
            inv = renorm_map.algebraic_invariants(X, p)
            worst_pullback = max(worst_pullback, inv.residual / inv.scale)
        cone_violations += renorm_map.cone_checks(triples, p).sign_violations
    elapsed = time.perf_counter() - t0
    checks = {
        "det<=1e-9": worst_det <= 1e-9,
        "c=lam*b<=1e-9": worst_cb <= 1e-9,
        "curve-eq<=1e-8": worst_semi <= 1e-8,
        "green-eq<=1e-6": worst_green <= 1e-6,
        "pullback<=1e-9": worst_pullback <= 1e-9,
        "cone=0": cone_violations == 0,
    }
    ok = all(checks.values()) and elapsed < 30.0
    _report(3, "structural identities", ok, elapsed, 30, str(checks))
    assert all(checks.values()), checks
    assert elapsed < 30.0


def test_criterion_04_collapsed_orbit():
    t0 = time.perf_counter()
    worst = 0.0
    for delta in (0.5, 2.0, 3.0):
        p = derive_params(delta / (1.0 + delta))
        ld = math.log(delta)
        for rec in renorm_map.collapsed_line_orbit_logs(p, 40):
            target = rec["target_log"]
            scale = max(1.0, abs(target))
            if rec["n"] == 1:
                worst = max(worst, abs(rec["log_x"] - target) / scale)
            else:
                worst = max(worst, abs(rec["log_x"] + target) / scale)
                worst = max(worst, abs(rec["log_y"] - target) / scale)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 1.0
    _report(4, "collapsed-line orbit", ok, elapsed, 1, f"log residual {worst:.2e}")
    assert worst <= 1e-10
    assert elapsed < 1.0


def test_criterion_05_ids_weyl_and_selfsimilarity():
    t0 = time.perf_counter()
    p = derive_params(0.5)
    level = 12
    weyl_ok = True
    nd_ok = True
    for R in (10.0, 100.0, 1000.0):
        n_est = spectral.ids(p, (1,) * level, level, [-R], boundary="neumann")[0]
        d_est = spectral.ids(p, (1,) * level, level, [-R], boundary="dirichlet")[0]
        want = math.sqrt(R) / math.pi
        weyl_ok = weyl_ok and abs(n_est.normalized - want) <= 0.02 * want
        nd_ok = nd_ok and abs(n_est.normalized - d_est.normalized) <= 2.0 * 2.0**-level
    selfsim_ok = True
    for alpha in (ALPHA_THIRD, ALPHA_TWO_THIRDS):
        q = derive_params(alpha)
        B = (-10.0, -1.0)
        vals = spectral.ids(
            q, (1,) * level, level, [B[0], B[1], q.gamma * B[0], q.gamma * B[1]]
        )
        mu_b = vals[0].normalized - vals[1].normalized
        mu_gb = vals[2].normalized - vals[3].normalized
        selfsim_ok = selfsim_ok and abs(mu_gb - 2.0 * mu_b) <= 0.03 * 2.0 * mu_b
    elapsed = time.perf_counter() - t0
    ok = weyl_ok and nd_ok and selfsim_ok and elapsed < 120.0
    _report(5, "density of states", ok, elapsed, 120,
            f"weyl<=2%: {weyl_ok}, N/D gap: {nd_ok}, self-similarity<=3%: {selfsim_ok}")
    assert weyl_ok and nd_ok and selfsim_ok
    assert elapsed < 120.0


# Frozen at first measurement (level 12, subdivision depth 20): in-support
# samples carry estimates up to 1.6e-2, an order below the smallest tested
# gap exponent log(delta)/8 = 8.7e-2.
ZETA_SUPPORT_CEILING = 2e-2


def test_criterion_06_gap_ladder_separation():
    t0 = time.perf_counter()
    gap_ok = True
    for alpha in (ALPHA_THIRD, ALPHA_TWO_THIRDS):
        p = derive_params(alpha)
        rs = spectral.find_root_set(p, (-1700.0, -0.5))
        assert len(rs) >= 5
        cfg = verify.GAP_ESCAPE_CONFIG
        for k in range(1, 6):
            for pp in range(-3, 4):
                lam = p.gamma**pp * rs.root(k)
                res = spectral.classify(lam, p, cfg)
                zeta = spectral.lyapunov(lam, p).zeta
                gap_ok = gap_ok and res.verdict is spectral.Classification.GAP and zeta > 0.0

    support_ok = True
    fractions = {}
    for alpha in (ALPHA_TWO_THIRDS,):
        p = derive_params(alpha)
        level, extra = 12, 8
        op = string_oracle.build_operator(
            string_oracle.discretize(p, (1,) * level, depth=level + extra), "neumann"
        )
        n_lo = string_oracle.eigen_count(op, -5.0)
        n_hi = string_oracle.eigen_count(op, -0.05)
        idx = np.linspace(n_lo, n_hi - 1, 60).astype(int)
        floor = op.gershgorin_floor() - 1.0
        hits = 0
        for k in idx:
            lo, hi = floor, -0.05
            while hi - lo > 1e-10 * max(1.0, abs(lo)):
                mid = 0.5 * (lo + hi)
                if string_oracle.eigen_count(op, mid) > k:
                    hi = mid
                else:
                    lo = mid
            lam = 0.5 * (lo + hi)
            res = spectral.classify(lam, p, verify.GAP_ESCAPE_CONFIG)
            zeta = spectral.lyapunov(lam, p).zeta
            if res.verdict is spectral.Classification.IN_SUPPORT and zeta <= ZETA_SUPPORT_CEILING:
                hits += 1
        fractions[alpha] = hits / len(idx)
        support_ok = support_ok and fractions[alpha] >= 0.95
    elapsed = time.perf_counter() - t0
    ok = gap_ok and support_ok and elapsed < 120.0
    _report(6, "gap/ladder separation", ok, elapsed, 120,
            f"ladder points all gaps: {gap_ok}, in-support fractions {fractions}")
    assert gap_ok
    assert support_ok, fractions
    assert elapsed < 120.0


def test_criterion_07_spectral_type_dichotomy():
    t0 = time.perf_counter()
    alphas = (0.25, ALPHA_THIRD, 0.45, 0.55, ALPHA_TWO_THIRDS, 0.75)
    verdicts = {}
    ladder_ok = True
    for alpha in alphas:
        p = derive_params(alpha)
        rs = spectral.find_root_set(p, (-600.0, -0.5))
        for boundary in (halfline.NEUMANN, halfline.DIRICHLET):
            rep = halfline.build_eigenfunction((1, 0), boundary, p, rs, target_level=6)
            ns = halfline.norm_series(rep)
            verdicts[(round(alpha, 10), boundary)] = ns.verdict
            for rq, rc in zip(ns.ratios_quadrature, ns.ratios_cascade):
                ladder_ok = ladder_ok and abs(rq / rc - 1.0) <= 1e-6
    table_ok = True
    for alpha in alphas:
        delta = derive_params(alpha).delta
        want_n = halfline.Verdict.SQUARE_SUMMABLE if delta > 1 else halfline.Verdict.DIVERGENT
        want_d = halfline.Verdict.DIVERGENT if delta > 1 else halfline.Verdict.SQUARE_SUMMABLE
        table_ok = table_ok and verdicts[(round(alpha, 10), halfline.NEUMANN)] == want_n
        table_ok = table_ok and verdicts[(round(alpha, 10), halfline.DIRICHLET)] == want_d
    mirror_ok = all(
        verdicts[(round(alpha, 10), halfline.NEUMANN)]
        == verdicts[(round(1.0 - alpha, 10), halfline.DIRICHLET)]
        for alpha in alphas
    )
    elapsed = time.perf_counter() - t0
    ok = table_ok and mirror_ok and ladder_ok and elapsed < 120.0
    _report(7, "spectral-type dichotomy", ok, elapsed, 120,
            f"table: {table_ok}, mirror: {mirror_ok}, ladder ratios<=1e-6: {ladder_ok}")
    assert table_ok and mirror_ok and ladder_ok
    assert elapsed < 120.0


def test_criterion_08_finite_level_completeness(rng):
    t0 = time.perf_counter()
    p = derive_params(0.5)
    resid_ok = True
    worst = 0.0
    for _ in range(20):
        centers = rng.uniform(0.1, 0.9, size=4)
        weights = rng.normal(size=4)
        widths = rng.uniform(80.0, 400.0, size=4)

        def g(x, c=centers, w=weights, s=widths):
            out = np.zeros_like(x)
            for ci, wi, si in zip(c, w, s):
                out += wi * np.exp(-si * (x - ci) ** 2)
            return out

        rep = halfline.parseval_check(g, p, depth=10)
        worst = max(worst, rep.residual / rep.sq_norm)
        resid_ok = resid_ok and rep.residual <= 1e-8 * rep.sq_norm
    rs = spectral.find_root_set(p, (-1500.0, -0.5))
    builder = lambda label: halfline.build_eigenfunction(
        label, halfline.NEUMANN, p, rs, target_level=6, base_depth=10
    )
    rep = halfline.parseval_check(
        lambda x: np.cos(math.pi * x) - 0.4 * np.cos(2 * math.pi * x),
        p,
        depth=10,
        root_set=rs,
        align_labels=((1, 0), (1, 1), (2, 0), (1, 2), (3, 0)),
        rep_builder=builder,
    )
    align_ok = all(c >= 0.999 for _, _, c in rep.alignments)
    min_align = min(c for _, _, c in rep.alignments)
    elapsed = time.perf_counter() - t0
    ok = resid_ok and align_ok and elapsed < 60.0
    _report(8, "finite-level completeness", ok, elapsed, 60,
            f"worst residual {worst:.2e} (tol 1e-8), min alignment {min_align:.6f}")
    assert resid_ok and align_ok
    assert elapsed < 60.0


# Frozen at first measurement: energy ratios on refined support parameters
# stayed within [0.09, 4.9]; the bound keeps a wide margin.
ENERGY_RATIO_BOUND = 100.0

# Frozen at first measurement: log|trace product| stayed below 1.13 through
# level 26 on every refined support parameter, with the max past level 20
# exceeding the level-20 max by at most 0.1.
PI_LOG_CEILING = 3.0
PI_TAIL_EXCESS = 0.5


def test_criterion_09_deep_level_machinery(rng, support_params_two_thirds):
    t0 = time.perf_counter()
    # randomized two-sided bound trials
    trials = 0
    failures = 0
    while trials < 10_000:
        A = rng.normal(size=(2, 2))
        K = A.T @ A + 1e-6 * np.eye(2)
        theta = rng.uniform(0.05, math.pi - 0.05)
        S = rng.normal(size=(2, 2))
        det = np.linalg.det(S)
        if abs(det) < 1e-3:
            continue
        S /= math.sqrt(abs(det))
        rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        G = S @ rot @ np.linalg.inv(S)
        if abs(np.trace(G)) >= 2.0 - 1e-9:
            continue
        G /= math.copysign(math.sqrt(abs(np.linalg.det(G))), 1.0)
        trials += 1
        if not halfline.quad_form_bound_check(K, G, n_dirs=16)["ok"]:
            failures += 1
    bounds_ok = failures == 0

    # balanced energy recursion at quadrature level, n <= 8
    recursion_ok = True
    p = derive_params(ALPHA_TWO_THIRDS)
    for lam in (-2.0, -0.7):
        for n in range(0, 9):
            res = halfline.gram_recursion_residual(p, lam, n, base_depth=12)
            recursion_ok = recursion_ok and res["residual_balanced"] <= 1e-6
            recursion_ok = recursion_ok and res["residual_discrete"] <= 1e-6

    # trace products and energy ratios on ten support parameters: the
    # product stays under the frozen ceiling through level 20 and shows no
    # growth trend when tracked six levels further
    lams = support_params_two_thirds
    product_ok = len(lams) >= 10
    ratio_ok = len(lams) >= 10
    for lam in lams:
        sub = halfline.trace_subsequence(lam, p, N=26)
        logs = sub.product_log_abs
        max20 = max(logs[:21])
        product_ok = (
            product_ok
            and max20 <= PI_LOG_CEILING
            and max(logs) <= max20 + PI_TAIL_EXCESS
            and len(sub.indices) > 0
        )
        ratios = halfline.energy_ratios(lam, p, levels=20)
        for n in sub.indices:
            if n - 1 >= len(ratios):
                continue
            for v in ratios[n - 1]["ratios"].values():
                ratio_ok = ratio_ok and (1.0 / ENERGY_RATIO_BOUND <= v <= ENERGY_RATIO_BOUND)
    elapsed = time.perf_counter() - t0
    ok = bounds_ok and recursion_ok and product_ok and ratio_ok and elapsed < 120.0
    _report(9, "deep-level machinery", ok, elapsed, 120,
            f"bounds 1e4 trials: {bounds_ok}, recursion<=1e-6: {recursion_ok}, "
            f"trace product stable: {product_ok}, ratios in [1/{ENERGY_RATIO_BOUND:g}, "
            f"{ENERGY_RATIO_BOUND:g}]: {ratio_ok} ({len(lams)} support params)")
    assert bounds_ok and recursion_ok and product_ok and ratio_ok
    assert elapsed < 120.0


def test_criterion_10_verify_determinism(tmp_path):
    t0 = time.perf_counter()
    out1 = tmp_path / "verify_jobs1.json"
    out8 = tmp_path / "verify_jobs8.json"
    code1 = cli.main(["verify", "--fast", "--jobs", "1", "--out", str(out1)])
    code8 = cli.main(["verify", "--fast", "--jobs", "8", "--out", str(out8)])
    identical = out1.read_bytes() == out8.read_bytes()
    passed = json.loads(out1.read_text())["all_passed"]
    elapsed = time.perf_counter() - t0
    ok = identical and passed and code1 == 0 and code8 == 0
    _report(10, "verify determinism", ok, elapsed, 120,
            f"byte-identical: {identical}, all checks passed: {passed}")
    assert code1 == 0 and code8 == 0
    assert identical
    assert passed
