"""Exact 1D transport: quantiles, W_p, displacement, weighted Sobolev norm."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swgeo.measures import stream
from swgeo.ot1d import (
    Slice1D,
    cdf_eval,
    displacement_1d,
    eval_quantile,
    quantile_breaks,
    w_infty_1d,
    w_p_1d,
    weighted_hneg1,
)


def brute_w_p(x, y, p):
    """Minimum over permutation couplings of equal-count uniform atoms."""
    n = len(x)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        cost = sum(abs(x[i] - y[perm[i]]) ** p for i in range(n)) / n
        best = min(best, cost)
    return best ** (1.0 / p)


def test_w2_two_atoms_to_one_oracle():
    mu = Slice1D.from_atoms([0.0, 1.0])
    nu = Slice1D.from_atoms([0.5])
    assert w_p_1d(mu, nu, 2.0) == pytest.approx(0.5, abs=1e-14)


def test_w1_uniform_to_center_oracle():
    mu = Slice1D.from_grid(0.0, 1.0, np.ones(64))
    nu = Slice1D.from_atoms([0.5])
    assert w_p_1d(mu, nu, 1.0) == pytest.approx(0.25, abs=1e-13)


def test_w_p_matches_brute_force():
    rng = stream(17)
    for case in range(60):
        n = int(rng.integers(2, 6))
        p = (1.0, 2.0, 3.0, 1.5)[case % 4]
        x = np.sort(rng.normal(size=n))
        y = np.sort(rng.normal(size=n))
        mu = Slice1D.from_atoms(x)
        nu = Slice1D.from_atoms(y)
        assert w_p_1d(mu, nu, p) == pytest.approx(brute_w_p(x, y, p), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=2, max_size=6),
    st.lists(st.floats(-5, 5), min_size=2, max_size=6),
)
def test_w_p_monotone_in_p(xs, ys):
    mu = Slice1D.from_atoms(np.asarray(xs))
    nu = Slice1D.from_atoms(np.asarray(ys))
    vals = [w_p_1d(mu, nu, p) for p in (1.0, 1.5, 2.0, 3.0, 4.0)]
    for lo, hi in zip(vals, vals[1:]):
        assert lo <= hi + 1e-10


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=1, max_size=5),
    st.lists(st.floats(-5, 5), min_size=1, max_size=5),
    st.lists(st.floats(-5, 5), min_size=1, max_size=5),
)
def test_w_p_triangle_inequality(xs, ys, zs):
    a = Slice1D.from_atoms(np.asarray(xs))
    b = Slice1D.from_atoms(np.asarray(ys))
    c = Slice1D.from_atoms(np.asarray(zs))
    assert w_p_1d(a, c) <= w_p_1d(a, b) + w_p_1d(b, c) + 1e-10


def test_quantile_generalized_inverse_convention():
    s = Slice1D.from_atoms([-2.0, 0.0, 3.0], [0.2, 0.5, 0.3])
    qb = quantile_breaks(s)
    # F^{-1}(0) is the leftmost support point, not -inf
    assert eval_quantile(qb, 0.0)[0] == -2.0
    assert eval_quantile(qb, 0.2)[0] == -2.0
    assert eval_quantile(qb, 0.2 + 1e-12)[0] == 0.0
    assert eval_quantile(qb, 1.0)[0] == 3.0


def test_quantile_breaks_tolerates_sub_ulp_masses():
    # masses below one ulp of the running sum used to produce repeated
    # breakpoints and fail the strict-monotonicity gate
    s = Slice1D.from_atoms([0.0, 0.5, 1.0], [0.5, 1e-300, 0.5])
    qb = quantile_breaks(s)
    assert np.all(np.diff(qb.u) > 0)
    two = Slice1D.from_atoms([0.0, 1.0])
    assert w_p_1d(s, two, 2.0) == pytest.approx(0.0, abs=1e-12)

    vals = np.ones(32)
    vals[5] = 1e-290
    g = Slice1D.from_grid(0.0, 1.0, vals)
    qb2 = quantile_breaks(g)
    assert np.all(np.diff(qb2.u) > 0)


def test_displacement_endpoints():
    mu = Slice1D.from_atoms([0.0, 2.0], [0.5, 0.5])
    nu = Slice1D.from_atoms([1.0, 5.0], [0.5, 0.5])
    start = displacement_1d(mu, nu, 0.0)
    np.testing.assert_allclose(np.sort(start.positions), [0.0, 2.0], atol=1e-15)
    end = displacement_1d(mu, nu, 1.0)
    np.testing.assert_allclose(np.sort(end.positions), [1.0, 5.0], atol=1e-15)


def test_displacement_midpoint_of_deltas():
    mid = displacement_1d(Slice1D.from_atoms([0.0]), Slice1D.from_atoms([2.0]), 0.5)
    assert mid.positions.size == 1 and mid.positions[0] == pytest.approx(1.0)


def test_displacement_monotone_pairing():
    mu = Slice1D.from_atoms([-1.0, 1.0], [0.5, 0.5])
    nu = Slice1D.from_atoms([-2.0, 2.0], [0.5, 0.5])
    mid = displacement_1d(mu, nu, 0.5)
    np.testing.assert_allclose(np.sort(mid.positions), [-1.5, 1.5], atol=1e-15)
    np.testing.assert_allclose(mid.weights, [0.5, 0.5], atol=1e-15)


def test_displacement_constant_speed():
    rng = stream(23)
    for _ in range(10):
        mu = Slice1D.from_atoms(rng.normal(size=4), rng.random(4) + 0.1)
        nu = Slice1D.from_atoms(rng.normal(size=6), rng.random(6) + 0.1)
        full = w_p_1d(mu, nu, 2.0)
        for t in (0.25, 0.5, 0.75):
            part = w_p_1d(mu, displacement_1d(mu, nu, t), 2.0)
            assert part == pytest.approx(t * full, abs=1e-10)


def test_w_infty_shift():
    mu = Slice1D.from_grid(0.0, 1.0, np.ones(32))
    nu = Slice1D.from_grid(0.25, 1.25, np.ones(32))
    assert w_infty_1d(mu, nu) == pytest.approx(0.25, abs=1e-12)
    a = Slice1D.from_atoms([0.0, 1.0])
    b = Slice1D.from_atoms([0.1, 1.3])
    assert w_infty_1d(a, b) == pytest.approx(0.3, abs=1e-12)


def test_weighted_hneg1_zero_on_equal():
    sigma = Slice1D.from_grid(0.0, 1.0, np.ones(64))
    assert weighted_hneg1(sigma, sigma, sigma) == pytest.approx(0.0, abs=1e-14)


def test_weighted_hneg1_tilted_oracle():
    # F_mu = x, F_nu = x^2 on [0,1], sigma uniform:
    # value = (int (x - x^2)^2 dx)^{1/2} = 1/sqrt(30)
    n = 4096
    centers = (np.arange(n) + 0.5) / n
    mu = Slice1D.from_grid(0.0, 1.0, np.ones(n))
    nu = Slice1D.from_grid(0.0, 1.0, 2.0 * centers)
    val = weighted_hneg1(mu, nu, mu)
    assert val == pytest.approx(0.18257418583505536, abs=1e-5)


def test_weighted_hneg1_divergence_flag():
    sigma = Slice1D.from_grid(0.0, 1.0, np.ones(32))
    shifted = Slice1D.from_grid(2.0, 3.0, np.ones(32))
    val, diag = weighted_hneg1(sigma, shifted, sigma, return_diagnostics=True)
    assert math.isinf(val) and diag["divergent"]
    assert diag["zero_density_cdf_gap"] > 0.9


def test_weighted_hneg1_lebesgue_matches_unweighted():
    # sigma = uniform on [0,1] has density 1, so the weighted norm reduces
    # to the plain L^2 norm of the CDF difference
    rng = stream(29)
    sigma = Slice1D.from_grid(0.0, 1.0, np.ones(256))
    mu = Slice1D.from_atoms(rng.uniform(0.1, 0.9, size=5))
    nu = Slice1D.from_atoms(rng.uniform(0.1, 0.9, size=7))
    val = weighted_hneg1(mu, nu, sigma)
    r = np.linspace(0.0, 1.0, 200001)
    diff = cdf_eval(mu, r) - cdf_eval(nu, r)
    ref = math.sqrt(np.trapezoid(diff**2, r))
    assert val == pytest.approx(ref, rel=1e-3)


def test_weighted_hneg1_clip_diagnostics():
    sigma = Slice1D.from_grid(0.0, 1.0, np.ones(64))
    nu = Slice1D.from_grid(0.0, 1.0, 2.0 * (np.arange(64) + 0.5) / 64)
    _, diag = weighted_hneg1(sigma, nu, sigma, return_diagnostics=True)
    assert not diag["divergent"]
    assert diag["clipped_sigma_mass"] == pytest.approx(2e-12, rel=0.5)


def test_slice_validation():
    with pytest.raises(ValueError):
        Slice1D.from_atoms([0.0, 1.0], [0.5, -0.5])
    with pytest.raises(ValueError):
        Slice1D.from_grid(1.0, 0.0, np.ones(8))
    with pytest.raises(ValueError):
        w_p_1d(Slice1D.from_atoms([0.0]), Slice1D.from_atoms([1.0]), 0.5)
