"""Catalog functions, oscillation integrals, and weighted gradient norms."""

from __future__ import annotations

import math

import numpy as np
import pytest

from dyadicweights.funcspace import (
    Quadrature,
    catalog,
    catalog_names,
    grad_mass,
    grad_power_mass,
    l1_weighted_norm,
    mean_abs,
    omega,
    omega_bruteforce,
    omega_flagged,
    omega_indicator,
    omega_window,
    sobolev_seminorm,
    tensor_tent,
)
from dyadicweights.grid import Shift, window_1d
from dyadicweights.weights import ConstantWeight, PowerWeight


def test_catalog_names_exist():
    for name in (
        "constant",
        "linear",
        "linear_ramp",
        "tent",
        "smoothed_indicator",
        "sharp1_bump",
        "sharp2_fdelta",
        "sharp3_fbeta",
    ):
        assert name in catalog_names()


def test_catalog_param_validation():
    with pytest.raises(ValueError):
        catalog("sharp2_fdelta", delta=1.5)
    with pytest.raises(ValueError):
        catalog("sharp3_fbeta", beta=5.0, p=2.0)
    with pytest.raises(ValueError):
        catalog("smoothed_indicator", width=-1.0)


def test_sharp1_bump_squeeze():
    f = catalog("sharp1_bump")
    xs = np.linspace(-2, 3, 2001)
    v = f.value(xs)
    ind_inner = ((xs >= 0) & (xs <= 1)).astype(float)
    ind_outer = ((xs > -1) & (xs < 2)).astype(float)
    assert np.all(v >= ind_inner - 1e-12)
    assert np.all(v <= ind_outer + 1e-12)
    assert np.all(np.abs(v[(xs >= 0) & (xs <= 1)] - 1.0) < 1e-12)


def test_sharp2_fdelta_values():
    f = catalog("sharp2_fdelta", delta=0.5)
    assert f.value(np.array([1.0]))[0] == pytest.approx(2.0, rel=1e-14)
    assert f.value(np.array([-3.0]))[0] == 0.0
    assert f.value(np.array([9.0]))[0] == pytest.approx(2.0, rel=1e-14)


def test_linear_ramp_gradient_support():
    f = catalog("linear_ramp", slope=1.0, cutoff=10.0)
    assert f.grad(np.array([3.0]))[0] == 1.0
    assert f.grad(np.array([11.0]))[0] == 0.0
    assert f.value(np.array([12.0]))[0] == 10.0


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    fns = [
        catalog("tent"),
        catalog("smoothed_indicator", width=0.25),
        catalog("sharp2_fdelta", delta=0.5),
        catalog("linear_ramp", slope=2.0, cutoff=3.0),
    ]
    for f in fns:
        for _ in range(40):
            x = float(rng.uniform(-3, 3))
            # stay away from kinks so the classical derivative exists
            if any(abs(x - b) < 1e-2 for b in f.breakpoints):
                continue
            h = 1e-5
            fd = (f.value(np.array([x + h]))[0] - f.value(np.array([x - h]))[0]) / (
                2 * h
            )
            g = f.grad(np.array([x]))[0]
            assert abs(fd - g) < 5e-7 * max(1.0, abs(g)) + 1e-8


def test_constant_outside_gradient_support():
    rng = np.random.default_rng(2)
    for f in (catalog("tent"), catalog("sharp1_bump"), catalog("sharp2_fdelta", delta=0.3)):
        r = f.grad_radius
        left = f.value(rng.uniform(-r - 50, -r - 1, size=50))
        right = f.value(rng.uniform(r + 1, r + 50, size=50))
        assert np.ptp(left) == 0.0
        assert np.ptp(right) == 0.0


def test_omega_constant_zero():
    f = catalog("constant", c=3.0)
    assert omega(f, (0.0, 1.0)) == 0.0


def test_omega_linear_closed_form():
    # omega of slope-s linear over a length-h interval is |s| h / 3
    f = catalog("linear", slope=2.0)
    for a, h in ((0.0, 1.0), (-3.0, 0.5), (1.7, 4.0)):
        assert omega(f, (a, a + h)) == pytest.approx(2.0 * h / 3.0, rel=1e-12)


def test_omega_indicator_closed_form():
    f = catalog("indicator", a=0.0, b=0.5)
    got = omega(f, (0.0, 1.0))
    assert got == pytest.approx(0.5, rel=1e-12)
    assert omega_indicator((0.0, 1.0), 0.0, 0.5) == pytest.approx(0.5, rel=1e-15)


def test_omega_monotone_path_matches_linear_path():
    f = catalog("linear", slope=1.0)  # monotone and piecewise linear
    a, b = -0.7, 2.1
    lin = omega(f, (a, b), method="exact")
    # force the monotone-primitive route
    from dyadicweights.funcspace import _double_integral_monotone

    mono = _double_integral_monotone(f, a, b) / (b - a) ** 2
    assert mono == pytest.approx(lin, rel=1e-12)


def test_omega_exact_vs_bruteforce_catalog():
    rng = np.random.default_rng(3)
    fns = [
        catalog("tent"),
        catalog("linear_ramp", slope=1.0, cutoff=2.0),
        catalog("sharp2_fdelta", delta=0.5),
        catalog("indicator", a=0.0, b=1.0),
    ]
    for f in fns:
        for _ in range(12):
            a = float(rng.uniform(-3, 2))
            b = a + float(rng.uniform(0.2, 3))
            ex = omega(f, (a, b))
            bf = omega_bruteforce(f, (a, b), nodes=3000)
            assert bf == pytest.approx(ex, rel=2e-6, abs=1e-12)


def test_omega_sampled_vs_bruteforce_smooth():
    f = catalog("smoothed_indicator", width=0.5)
    for (a, b) in ((-1.0, 2.0), (-0.3, 0.4), (0.2, 1.9)):
        smp, ok = omega_flagged(f, (a, b), Quadrature(rel_tol=1e-9))
        assert ok
        bf = omega_bruteforce(f, (a, b), nodes=4000)
        assert smp == pytest.approx(bf, rel=3e-6, abs=1e-12)


def test_omega_gradient_bound():
    # omega_Q(f) <= sqrt(n) * integral over Q of |grad f|
    rng = np.random.default_rng(4)
    fns = [
        catalog("tent"),
        catalog("smoothed_indicator", width=0.25),
        catalog("sharp2_fdelta", delta=0.4),
        catalog("linear_ramp", slope=3.0, cutoff=1.0),
    ]
    for f in fns:
        for _ in range(25):
            a = float(rng.uniform(-2, 2))
            b = a + float(rng.uniform(0.1, 3))
            om = omega(f, (a, b))
            gm = grad_mass(f, a, b)
            assert om <= gm + 1e-6 * max(1.0, gm)


def test_omega_2d_tensor_tent_vs_bruteforce():
    f = tensor_tent()
    box = ((0.0, 2.0), (0.0, 2.0))
    val, ok = omega_flagged(f, box, Quadrature(rel_tol=1e-5, max_nodes=1 << 16))
    bf = omega_bruteforce(f, box, nodes=120**2)
    assert val == pytest.approx(bf, rel=5e-4)


def test_omega_window_exact_and_sampled_agree():
    w = window_1d(-2, 2, -3, 1, shifts=[Shift((0,)), Shift((1,))])
    tentf = catalog("tent")
    exact_map = omega_window(tentf, w)
    smooth = catalog("smoothed_indicator", width=0.5)
    sampled_map = omega_window(smooth, w, Quadrature(leaf_nodes=64))
    assert set(exact_map) == set(sampled_map)
    # spot check the sampled sweep against per-cube brute force
    rng = np.random.default_rng(5)
    keys = list(sampled_map)
    for idx in rng.choice(len(keys), size=12, replace=False):
        key = keys[idx]
        thirds, j, m = key
        from dyadicweights.grid import make_cube

        q = make_cube(Shift(thirds), j, m)
        bf = omega_bruteforce(smooth, q, nodes=2500)
        assert sampled_map[key] == pytest.approx(bf, rel=5e-5, abs=1e-12)


def test_sobolev_seminorm_linear_unit():
    f = catalog("linear", slope=1.0)
    w = ConstantWeight(1.0)
    assert sobolev_seminorm(f, w, 1.0, (0.0, 1.0)) == pytest.approx(1.0, rel=1e-14)


def test_sobolev_seminorm_fdelta_exact():
    # |f'|^p with the matched power weight integrates to 1/delta exactly
    for delta in (0.5, 0.25, 0.03125):
        p = 2.0
        f = catalog("sharp2_fdelta", delta=delta)
        w = PowerWeight((p - 1) * (1 - delta))
        val = grad_power_mass(f, -5.0, 5.0, p, w)
        assert val == pytest.approx(1.0 / delta, rel=1e-12)


def test_sobolev_seminorm_tent_l2():
    f = catalog("tent")
    w = ConstantWeight(1.0)
    assert sobolev_seminorm(f, w, 2.0, (-1.0, 3.0)) == pytest.approx(
        math.sqrt(2.0), rel=1e-12
    )


def test_grad_power_mass_power_weight_offcenter_quadrature():
    f = catalog("sharp2_fdelta", delta=0.5)
    w = PowerWeight(-0.5, center=0.25)
    got = grad_power_mass(f, 0.0, 1.0, 1.0, w)
    # oracle via dense quadrature of |f'| w
    from dyadicweights.quadrature import adaptive_quad

    want = adaptive_quad(
        lambda x: np.abs(f.grad(x)) * w.value(x),
        1e-12,
        1.0,
        breakpoints=(0.25,),
        rel_tol=1e-10,
    )
    assert got == pytest.approx(want, rel=1e-6)


def test_l1_weighted_norm_tent():
    f = catalog("tent")
    w = ConstantWeight(2.0)
    assert l1_weighted_norm(f, w, -1.0, 3.0) == pytest.approx(2.0, rel=1e-10)


def test_mean_abs_indicator():
    f = catalog("indicator", a=0.0, b=1.0)
    assert mean_abs(f, -1.0, 3.0) == pytest.approx(0.25, rel=1e-13)
    assert mean_abs(f, 0.0, 0.5) == pytest.approx(1.0, rel=1e-13)


def test_primitive_continuity():
    for f in (
        catalog("tent"),
        catalog("sharp2_fdelta", delta=0.5),
        catalog("smoothed_indicator", width=0.3),
    ):
        for b in f.breakpoints:
            left = f.primitive(np.array([b - 1e-9]))[0]
            right = f.primitive(np.array([b + 1e-9]))[0]
            assert abs(left - right) < 1e-7


def test_primitive_matches_quadrature():
    from dyadicweights.quadrature import adaptive_quad

    f = catalog("smoothed_indicator", width=0.4)
    for (a, b) in ((-2.0, 0.3), (0.1, 2.2)):
        got = f.primitive(np.array([b]))[0] - f.primitive(np.array([a]))[0]
        want = adaptive_quad(f.value, a, b, breakpoints=f.breakpoints)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12)
