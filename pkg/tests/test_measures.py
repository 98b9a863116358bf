"""Measure containers, seeded sampling, moments, and file round-trips."""

import math

import numpy as np
import pytest

from swgeo.measures import (
    DiscreteMeasure,
    GridDensity,
    GridField,
    canonicalize,
    disk_density,
    from_points,
    gaussian_density,
    load_grid,
    load_measure_csv,
    min_gap,
    normalize_to_density,
    sample_empirical,
    save_grid,
    save_measure_csv,
    second_moment,
    stream,
    uniform_box_density,
    winfty_discrete,
)


def test_stream_reproducible_and_keyed():
    a = stream(7).standard_normal(8)
    b = stream(7).standard_normal(8)
    np.testing.assert_array_equal(a, b)
    c = stream(7, 1).standard_normal(8)
    d = stream(7, 2).standard_normal(8)
    assert not np.array_equal(c, d)
    assert not np.array_equal(a, c)


def test_from_points_normalizes_weights():
    mu = from_points([[0.0, 0.0], [1.0, 0.0]], [2.0, 6.0])
    np.testing.assert_allclose(mu.weights, [0.25, 0.75])
    assert mu.dim == 2 and mu.n_atoms == 2
    uni = from_points([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])
    np.testing.assert_allclose(uni.weights, np.full(3, 1.0 / 3.0))


def test_from_points_validation():
    with pytest.raises(ValueError):
        from_points([[0.0, 0.0]], [-1.0])
    with pytest.raises(ValueError):
        from_points([[0.0, 0.0], [1.0, 1.0]], [1.0])
    with pytest.raises(ValueError):
        from_points([[math.nan, 0.0]])


def test_canonicalize_merges_coincident_atoms():
    mu = from_points([[1.0, 2.0], [0.0, 0.0], [1.0, 2.0]], [0.25, 0.5, 0.25])
    merged = canonicalize(mu)
    assert merged.n_atoms == 2
    i = int(np.argmax(merged.points[:, 0]))
    assert merged.weights[i] == pytest.approx(0.5, abs=1e-15)


def test_min_gap():
    mu = from_points([[0.0, 0.0], [3.0, 4.0], [0.0, 1.0]])
    assert min_gap(mu) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        min_gap(from_points([[0.0, 0.0]]))


def test_second_moment_atoms_exact():
    mu = from_points([[1.0, 0.0], [0.0, 2.0]], [0.5, 0.5])
    assert second_moment(mu) == pytest.approx(2.5, abs=1e-15)


def test_second_moment_unit_square():
    # oracle: int (x^2 + y^2) over [0,1]^2 = 2/3; midpoint quadrature error
    # is exactly h^2/6 for this integrand
    mu = uniform_box_density([[0.0, 1.0], [0.0, 1.0]], (256, 256))
    assert second_moment(mu) == pytest.approx(2.0 / 3.0, abs=1e-5)


def test_winfty_two_pairs_oracle():
    mu = from_points([[0.0, 0.0], [1.0, 0.0]])
    nu = from_points([[0.0, 0.1], [1.0, 0.2]])
    # frozen brute-force value over both bijections
    assert winfty_discrete(mu, nu) == pytest.approx(0.2, abs=1e-12)


def test_winfty_requires_uniform_equal_clouds():
    mu = from_points([[0.0, 0.0], [1.0, 0.0]], [0.3, 0.7])
    nu = from_points([[0.0, 0.1], [1.0, 0.2]])
    with pytest.raises(ValueError):
        winfty_discrete(mu, nu)
    with pytest.raises(ValueError):
        winfty_discrete(from_points([[0.0, 0.0]]), nu)


def test_sample_empirical_reproducible():
    mu = gaussian_density([[-2.0, 2.0], [-2.0, 2.0]], (64, 64), (0.0, 0.0), 0.5)
    a = sample_empirical(mu, 50, 3, key=(1,))
    b = sample_empirical(mu, 50, 3, key=(1,))
    np.testing.assert_array_equal(a.points, b.points)
    c = sample_empirical(mu, 50, 3, key=(2,))
    assert not np.array_equal(a.points, c.points)
    assert np.all(a.points >= -2.0) and np.all(a.points <= 2.0)


def test_sample_empirical_from_atoms_stays_on_support():
    mu = from_points([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]], [0.2, 0.3, 0.5])
    emp = sample_empirical(mu, 40, 11)
    for p in emp.points:
        assert any(np.array_equal(p, q) for q in mu.points)
    np.testing.assert_allclose(emp.weights, np.full(40, 1.0 / 40.0))


def test_measure_csv_roundtrip_exact(tmp_path):
    rng = stream(5)
    mu = from_points(rng.normal(size=(13, 2)), rng.random(13) + 0.05)
    path = tmp_path / "m.csv"
    save_measure_csv(mu, path)
    back = load_measure_csv(path)
    np.testing.assert_array_equal(back.points, mu.points)
    # loading renormalizes, which can move weights by an ulp
    np.testing.assert_allclose(back.weights, mu.weights, rtol=0, atol=1e-15)


def test_grid_roundtrip_exact(tmp_path):
    dens = gaussian_density([[-1.0, 1.0], [-1.0, 1.0]], (32, 32), (0.1, -0.2), 0.3)
    p = tmp_path / "d.npz"
    save_grid(dens, p)
    back = load_grid(p, kind="density")
    assert isinstance(back, GridDensity)
    np.testing.assert_array_equal(back.values, dens.values)
    np.testing.assert_array_equal(back.box, dens.box)

    field = GridField(dens.box, dens.values - dens.values.mean())
    p2 = tmp_path / "f.npz"
    save_grid(field, p2)
    back2 = load_grid(p2, kind="field")
    assert type(back2) is GridField
    np.testing.assert_array_equal(back2.values, field.values)


def test_stock_densities_integrate_to_one():
    box = [[-1.5, 1.5], [-1.5, 1.5]]
    for dens in (
        uniform_box_density(box, (48, 48)),
        gaussian_density(box, (48, 48), (0.0, 0.2), 0.3),
        disk_density(box, (48, 48), (0.0, 0.0), 1.0),
    ):
        assert dens.integral() == pytest.approx(1.0, abs=1e-12)


def test_grid_density_gates():
    box = np.array([[0.0, 1.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        GridDensity(box, -np.ones((4, 4)))
    with pytest.raises(ValueError):
        GridDensity(box, np.full((4, 4), 3.0))
    ok = normalize_to_density(box, np.full((4, 4), 3.0))
    assert ok.integral() == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        normalize_to_density(box, np.zeros((4, 4)))
