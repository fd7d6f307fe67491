"""Level sets, the weak-type oscillation functional, and good-cube machinery."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from dyadicweights.oscillation import (
    OscillationConfig,
    admissible_beta,
    alpha_exponent,
    oscillation_functional,
    check_domination,
    classify_good,
    cube_weight,
    level_set,
    max_antichain_weight_bruteforce,
    mean_functional,
    sparse_chain_check,
    verify_oscillation,
    verify_mean_functional,
)
from dyadicweights.funcspace import catalog, omega_window
from dyadicweights.grid import Shift, all_shifts, children, make_cube, window_1d
from dyadicweights.weights import ConstantWeight, PowerWeight

S0 = Shift((0,))


def test_admissible_beta_sets():
    assert admissible_beta(1.0, 2.0, 1)
    assert admissible_beta(1.0, -1.0, 1)
    assert not admissible_beta(1.0, 0.5, 1)  # p=1, n=1 excludes [0, 1]
    assert admissible_beta(1.0, 0.4, 2)  # below 1 - 1/n = 1/2
    assert not admissible_beta(2.0, 0.5, 1)
    assert admissible_beta(2.0, 0.49, 1)


def test_alpha_exponent_band():
    assert alpha_exponent(2.0, 0.0) == 2.0
    assert alpha_exponent(2.0, -0.5) == 2.0  # left edge of [1/p-1, 1/p)
    assert alpha_exponent(2.0, 0.5) == 1.0  # right edge excluded
    assert alpha_exponent(2.0, 2.0) == 1.0
    assert alpha_exponent(1.0, 2.0) == 1.0


def test_level_set_constant_empty():
    f = catalog("constant", c=5.0)
    w = window_1d(-2, 2, -3, 1)
    for lam in (0.01, 1.0, 100.0):
        members, flagged = level_set(f, w, lam, 0.0)
        assert members == []


def test_level_set_linear_edge_rule():
    # slope-1 linear: omega_Q = h/3, so at b=0 membership is h > 3 lam
    f = catalog("linear", slope=1.0)
    w = window_1d(-8, 8, -4, 3)
    lam = 0.07
    members, _ = level_set(f, w, lam, 0.0)
    for q in w.cubes():
        h = float(q.edge)
        if h / 3.0 > lam:
            assert q in members
        else:
            assert q not in members


def test_level_set_shrinks_in_lambda():
    f = catalog("tent")
    w = window_1d(-4, 4, -4, 2)
    omega_map = omega_window(f, w)
    prev = None
    for lam in (0.01, 0.05, 0.2, 1.0):
        members, _ = level_set(f, w, lam, 0.5, omega_map=omega_map)
        cur = set(members)
        if prev is not None:
            assert cur.issubset(prev)
        prev = cur


def test_level_set_bump_certifying_interval():
    # the interval (0,4) belongs to the level set of the bump at the
    # threshold 4^(-beta-3+1/p) with b = beta + 1 - 1/p
    f = catalog("sharp1_bump")
    p = 1.0
    for beta in (2.0, -1.0):
        lam = 4.0 ** (-beta - 3.0 + 1.0 / p)
        b = beta + 1.0 - 1.0 / p
        w = window_1d(-8, 8, 0, 3)
        members, _ = level_set(f, w, lam, b)
        target = make_cube(S0, 2, (0,))  # [0, 4)
        assert float(target.interval()[0]) == 0.0 and float(target.edge) == 4.0
        assert target in members


def test_functional_constant_zero_profile():
    cfg = OscillationConfig(
        p=1.0, beta=2.0, weight=ConstantWeight(1.0), window=window_1d(-2, 2, -2, 1)
    )
    prof = oscillation_functional(cfg, catalog("constant", c=1.0))
    assert prof.sup == 0.0
    assert all(v == 0.0 for v in prof.values)


def test_functional_matches_bruteforce_enumeration():
    # independent oracle: re-enumerate the window and sum from scratch at
    # several lambdas, sharing the omega values
    f = catalog("linear_ramp", slope=1.0, cutoff=6.0)
    win = window_1d(-8, 8, -6, 3)
    weight = ConstantWeight(1.0)
    p, beta = 1.0, 2.0
    cfg = OscillationConfig(p=p, beta=beta, weight=weight, window=win)
    omega_map = omega_window(f, win)
    prof = oscillation_functional(cfg, f, omega_map=omega_map)
    b = beta + 1.0 - 1.0 / p
    rng = np.random.default_rng(0)
    lams = list(rng.choice(prof.lambdas, size=8)) + [prof.argmax_lambda]
    for lam in lams:
        total = 0.0
        for q in win.cubes():
            om = omega_map[(q.shift.thirds, q.j, q.m)]
            vol = float(q.volume)
            if om > lam * vol**b:
                total += vol ** (beta * p - 1.0) * weight.mass(q)
        total *= lam**p
        i = prof.lambdas.index(lam)
        assert prof.values[i] == pytest.approx(total, rel=1e-9, abs=1e-300)
    assert prof.sup == pytest.approx(max(prof.values), rel=0)


def test_functional_profile_sup_at_threshold_nudge():
    f = catalog("tent")
    cfg = OscillationConfig(
        p=1.0, beta=2.0, weight=ConstantWeight(1.0), window=window_1d(-4, 4, -4, 2)
    )
    prof = oscillation_functional(cfg, f)
    assert prof.sup >= max(prof.values) * (1 - 1e-12)
    assert prof.boundary_share <= 1.0


def test_verify_oscillation_tent_stable_under_window_doubling():
    f = catalog("tent")
    weight = ConstantWeight(1.0)
    recs = []
    for (lo, hi, jmin, jmax) in ((-8, 8, -5, 3), (-16, 16, -5, 4)):
        cfg = OscillationConfig(
            p=1.0, beta=2.0, weight=weight, window=window_1d(lo, hi, jmin, jmax)
        )
        recs.append(verify_oscillation(cfg, f))
    assert all(r.passed for r in recs)
    assert recs[0].ratio > 0
    assert abs(recs[1].ratio - recs[0].ratio) <= 0.2 * recs[0].ratio


def test_verify_oscillation_tent_stable_under_j_extension():
    f = catalog("tent")
    weight = ConstantWeight(1.0)
    recs = []
    for (jmin, jmax) in ((-5, 3), (-7, 5)):
        cfg = OscillationConfig(
            p=1.0, beta=2.0, weight=weight, window=window_1d(-8, 8, jmin, jmax)
        )
        recs.append(verify_oscillation(cfg, f))
    assert abs(recs[1].ratio - recs[0].ratio) <= 0.2 * recs[0].ratio


def test_verify_oscillation_critical_band_reports_normalized_ratio():
    # p > 1 with beta in [1/p - 1, 1/p): the gap-normalized ratio is reported
    f = catalog("tent")
    cfg = OscillationConfig(
        p=2.0, beta=0.25, weight=ConstantWeight(1.0), window=window_1d(-4, 4, -4, 2)
    )
    rec = verify_oscillation(cfg, f)
    assert rec.details["constant_exponent"] == 2.0
    cbr = rec.details["critical_band_ratio"]
    assert math.isfinite(cbr) and cbr > 0
    assert cbr == pytest.approx(rec.ratio * (1.0 / 2.0 - 0.25), rel=1e-12)


def test_verify_oscillation_non_a1_weight_fails_and_grows():
    # the transition of the ramp sits at 0, which every unshifted dyadic cube
    # has as a corner; the shifted grids see it, and the ratio then grows
    # without bound as the window expands
    f = catalog("linear_ramp", slope=1.0, cutoff=10.0)
    weight = PowerWeight(0.5)
    ratios = []
    for (lo, hi, jmin, jmax) in ((-32, 32, -2, 5), (-128, 128, -2, 7), (-512, 512, -2, 9)):
        cfg = OscillationConfig(
            p=1.0,
            beta=2.0,
            weight=weight,
            window=window_1d(lo, hi, jmin, jmax, shifts=all_shifts(1)),
        )
        rec = verify_oscillation(cfg, f)
        assert not rec.passed
        assert rec.details.get("constant_unbounded")
        ratios.append(rec.ratio)
    assert ratios[1] > 1.5 * ratios[0]
    assert ratios[2] > 1.5 * ratios[1]


def test_mean_functional_indicator_matches_bruteforce():
    f = catalog("indicator", a=0.0, b=1.0)
    win = window_1d(-4, 4, -4, 2)
    weight = ConstantWeight(1.0)
    p, beta = 1.0, 2.0
    prof = mean_functional(f, weight, p, beta, win)
    b = beta - 1.0 / p
    for lam in (prof.argmax_lambda, prof.lambdas[3], prof.lambdas[-2]):
        total = 0.0
        for q in win.cubes():
            lo, hi = map(float, q.interval())
            inter = max(0.0, min(hi, 1.0) - max(lo, 0.0))
            mean = inter / (hi - lo)
            vol = float(q.volume)
            if mean > lam * vol**b:
                total += vol ** (beta * p - 1.0) * weight.mass(q)
        total *= lam**p
        i = prof.lambdas.index(lam)
        assert prof.values[i] == pytest.approx(total, rel=1e-9, abs=1e-300)


def test_mean_functional_band_rejected():
    f = catalog("indicator", a=0.0, b=1.0)
    win = window_1d(-2, 2, -2, 1)
    with pytest.raises(ValueError):
        mean_functional(f, ConstantWeight(1.0), 1.0, 0.5, win)


def test_mean_functional_beta_negative_window_stable():
    f = catalog("indicator", a=0.0, b=1.0)
    weight = ConstantWeight(1.0)
    sups = []
    for (lo, hi, jmax) in ((-4, 4, 2), (-8, 8, 3), (-16, 16, 4)):
        prof = mean_functional(f, weight, 1.0, -1.0, window_1d(lo, hi, -4, jmax))
        sups.append(prof.sup)
    # bounded by a constant multiple of ||f||_L1 = 1 across window growth
    assert max(sups) <= 4.0
    assert max(sups) / min(sups) <= 1.25


def test_verify_mean_functional_record():
    f = catalog("indicator", a=0.0, b=1.0)
    rec = verify_mean_functional(
        f, ConstantWeight(1.0), 1.0, 2.0, window_1d(-4, 4, -4, 2)
    )
    assert rec.passed
    assert rec.lhs > 0 and rec.rhs > 0


# ---------------------------------------------------------------------------
# good/bad cubes
# ---------------------------------------------------------------------------


def unit_cube():
    return make_cube(S0, 0, (0,))


def test_singleton_family_good():
    w = ConstantWeight(1.0)
    good, bad = classify_good([unit_cube()], 1.0, w)
    assert bad == [] and good == [unit_cube()]


def test_parent_child_pair_good_at_sigma_one():
    w = ConstantWeight(1.0)
    q = unit_cube()
    c = children(q)[0]
    good, bad = classify_good([q, c], 1.0, w)
    assert q in good and c in good and bad == []


def test_parent_bad_at_sigma_zero():
    w = ConstantWeight(1.0)
    q = unit_cube()
    kids = children(q)
    good, bad = classify_good([q, *kids], 0.0, w)
    assert q in bad
    assert all(c in good for c in kids)


def random_family(rng: random.Random, max_size: int = 14):
    shift = Shift((rng.choice((0, 1, 2)),))
    root = make_cube(shift, rng.randint(-1, 2), (rng.randint(-3, 3),))
    pool = [root]
    frontier = [root]
    for _ in range(3):
        nxt = []
        for q in frontier:
            for c in children(q):
                if rng.random() < 0.55:
                    nxt.append(c)
        pool.extend(nxt)
        frontier = nxt
    rng.shuffle(pool)
    pool = pool[: rng.randint(1, max_size)]
    return list(dict.fromkeys(pool))


def random_weight(rng: random.Random):
    kind = rng.random()
    if kind < 0.4:
        return ConstantWeight(rng.uniform(0.5, 3.0))
    if kind < 0.7:
        return PowerWeight(rng.uniform(-0.8, 0.0), center=rng.uniform(-1, 1))
    return PowerWeight(rng.uniform(0.0, 2.0), center=rng.uniform(-1, 1))


def test_classify_good_agrees_with_bruteforce():
    rng = random.Random(42)
    for _ in range(120):
        fam = random_family(rng)
        w = random_weight(rng)
        sigma = rng.uniform(-2.0, 2.0)
        good, bad = classify_good(fam, sigma, w)
        for q in fam:
            strict = max_antichain_weight_bruteforce(fam, sigma, w, q)
            own = cube_weight(q, sigma, w)
            has_desc = strict > 0
            if not has_desc:
                assert q in good
            elif strict <= own * (1 + 1e-12):
                assert q in good
            else:
                assert q in bad


def test_domination_all_good_trivial():
    w = ConstantWeight(1.0)
    fam = [unit_cube(), children(unit_cube())[0]]
    rec = check_domination(fam, 1.0, 0.0, w, "all_over_good")
    assert rec.passed


def test_domination_three_cube_example():
    w = ConstantWeight(1.0)
    q = unit_cube()
    fam = [q, *children(q)]
    rec = check_domination(fam, 0.0, -1.0, w, "all_over_good")
    # direct evaluation: |Q|^{gamma-1} v(Q) is |Q|^{-1} for v = 1, so the
    # family sums to 1 + 2 + 2; the halves are the good cubes and the
    # geometric factor is 1/(1 - 2^{-1}) = 2
    assert rec.lhs == pytest.approx(5.0, rel=1e-12)
    assert rec.rhs == pytest.approx(8.0, rel=1e-12)
    assert rec.passed


def test_domination_random_families():
    rng = random.Random(7)
    for _ in range(200):
        fam = random_family(rng)
        w = random_weight(rng)
        sigma = rng.uniform(-1.5, 1.5)
        gamma = sigma - rng.uniform(0.1, 2.0)
        rec = check_domination(fam, sigma, gamma, w, "all_over_good")
        assert rec.passed, (fam, sigma, gamma)
    for _ in range(200):
        fam = random_family(rng)
        w = random_weight(rng)
        sigma = rng.uniform(-1.5, 1.5)
        alpha = sigma + rng.uniform(0.1, 2.0)
        rec = check_domination(fam, sigma, alpha, w, "good_chain")
        assert rec.passed, (fam, sigma, alpha)


def test_domination_rejects_bad_exponent():
    w = ConstantWeight(1.0)
    with pytest.raises(ValueError):
        check_domination([unit_cube()], 0.0, 1.0, w, "all_over_good")
    with pytest.raises(ValueError):
        check_domination([unit_cube()], 0.0, -1.0, w, "good_chain")


def test_classify_rejects_cross_shift():
    fam = [make_cube(S0, 0, (0,)), make_cube(Shift((1,)), 0, (0,))]
    with pytest.raises(ValueError):
        classify_good(fam, 1.0, ConstantWeight(1.0))


# ---------------------------------------------------------------------------
# chain sparsity
# ---------------------------------------------------------------------------


def test_sparse_chain_empty_level_set():
    f = catalog("constant", c=2.0)
    rep = sparse_chain_check(
        f, 1.0, 0.0, 1.0, 1.0, window_1d(-2, 2, -3, 1), [0.1, 0.7]
    )
    assert rep["all_ok"]
    assert rep["n_checked"] == 0


def test_sparse_chain_linear_ramp():
    f = catalog("linear_ramp", slope=1.0, cutoff=8.0)
    win = window_1d(-8, 8, -6, 3)
    rep = sparse_chain_check(f, 0.01, 0.0, 1.0, 1.0, win, [0.12, -0.77, 3.4])
    assert rep["all_ok"]
    assert rep["n_checked"] > 0


def test_sparse_chain_tent_maximal_variant():
    f = catalog("tent")
    win = window_1d(-8, 8, -6, 3)
    rng = np.random.default_rng(1)
    pts = [float(x) for x in rng.uniform(-3, 3, size=100)]
    omega_map = omega_window(f, win)
    rep = sparse_chain_check(
        f, 0.001, 2.0, 1.0, 1.0, win, pts, omega_map=omega_map
    )
    assert rep["all_ok"]
    assert rep["n_checked"] >= 50


def test_verify_oscillation_two_dimensional_window():
    # p = 1, n = 2, beta below 1 - 1/n: tensor tent against a constant weight
    from fractions import Fraction

    from dyadicweights.funcspace import tensor_tent
    from dyadicweights.grid import GridWindow, all_shifts
    from dyadicweights.weights import ConstantWeight as CW

    box = ((Fraction(-2), Fraction(4)), (Fraction(-2), Fraction(4)))
    window = GridWindow(box, -2, 2, (all_shifts(2)[0],))
    cfg = OscillationConfig(
        p=1.0, beta=0.4, weight=CW(1.0, n=2), window=window, lambda_count=32
    )
    rec = verify_oscillation(cfg, tensor_tent())
    assert rec.lhs > 0
    assert rec.passed
    assert math.isfinite(rec.ratio)


def test_mean_functional_p2_bound():
    f = catalog("indicator", a=0.0, b=1.0)
    weight = PowerWeight(0.5)
    rec = verify_mean_functional(f, weight, 2.0, 1.0, window_1d(-4, 4, -4, 2))
    assert rec.passed
    assert rec.lhs > 0


def test_cli_budget_error_exit_code(tmp_path):
    from dyadicweights.cli import main

    code = main(
        [
            "verify-cddd",
            "--set",
            "grid.j_min=-20",
            "--set",
            "grid.j_max=0",
            "--set",
            "grid.budget=1000",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 1
