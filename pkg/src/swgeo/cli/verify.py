"""Named verification checks exercising the library's identities, bounds, and
experiments end to end at fixed reference resolutions.

Each check returns a CheckResult; `run_suite` executes a selection.  The
`tol_scale` knob loosens every tolerance uniformly: upper tolerances are
multiplied by it, strict lower thresholds divided by it.
"""

from __future__ import annotations

import dataclasses
import inspect
import itertools
import math
import time

import numpy as np

from .. import measures, ot1d, radon, slopes, sobolev, stats, swdist
from ..measures import DiscreteMeasure, GridField, from_points, stream

__all__ = ["CheckResult", "SUITE", "run_check", "run_suite"]


@dataclasses.dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    values: dict
    tolerance: str
    runtime: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        vals = " ".join(f"{k}={v:.6g}" for k, v in self.values.items())
        return f"{status} {self.name}: {vals} (tol {self.tolerance}) [{self.runtime:.2f} s]"


def _result(name, passed, values, tolerance, t0) -> CheckResult:
    return CheckResult(name, bool(passed), values, tolerance, time.perf_counter() - t0)


def _gaussian_potential(center, sigma, box=None, shape=None) -> slopes.Potential:
    c = np.asarray(center, dtype=np.float64)
    s2 = float(sigma) ** 2

    def value(pts):
        return np.exp(-((pts - c) ** 2).sum(axis=1) / (2.0 * s2))

    def grad(pts):
        return -(pts - c) / s2 * value(pts)[:, None]

    field = None
    if box is not None:
        probe = GridField(np.asarray(box, dtype=np.float64), np.zeros(shape))
        field = GridField(probe.box, value(probe.centers()).reshape(shape))
    return slopes.Potential(value, grad, field)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def check_identity_delta(seed=0, threads=1, tol_scale=1.0, n_atoms=None) -> CheckResult:
    """SW_2(mu, delta_0)^2 equals second_moment(mu)/d for equiangular d=2."""
    t0 = time.perf_counter()
    dirs = radon.make_directions(2, 64)
    delta = from_points(np.zeros((1, 2)))
    tol = 1e-12 * tol_scale
    worst = 0.0
    for i in range(20):
        rng = stream(seed, 1, i)
        n = int(rng.integers(2, 21)) if n_atoms is None else int(n_atoms)
        mu = from_points(rng.normal(scale=1.5, size=(n, 2)), rng.random(n) + 0.1)
        lhs = swdist.sw_p(mu, delta, 2.0, dirs, threads=threads) ** 2
        rhs = measures.second_moment(mu) / 2.0
        worst = max(worst, abs(lhs - rhs))
    return _result("identity-delta", worst < tol, {"max_gap": worst}, f"< {tol:g}", t0)


def check_sw_vs_w(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """SW <= W_2 / sqrt(d) on random discrete pairs, exact W_2."""
    t0 = time.perf_counter()
    dirs = radon.make_directions(2, 64)
    tol = 1e-9 * tol_scale
    worst = -math.inf
    for i in range(50):
        rng = stream(seed, 2, i)
        if i % 2 == 0:
            n = int(rng.integers(2, 33))
            mu = from_points(rng.normal(size=(n, 2)))
            nu = from_points(rng.normal(size=(n, 2)))
        else:
            n, m = int(rng.integers(2, 33)), int(rng.integers(2, 33))
            mu = from_points(rng.normal(size=(n, 2)), rng.random(n) + 0.05)
            nu = from_points(rng.normal(size=(m, 2)), rng.random(m) + 0.05)
        sw = swdist.sw_p(mu, nu, 2.0, dirs, threads=threads)
        w2 = swdist.w2_discrete(mu, nu)
        worst = max(worst, sw - w2 / math.sqrt(2.0))
    return _result("sw-vs-w", worst < tol, {"max_violation": worst}, f"< {tol:g}", t0)


def check_ot1d_brute(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """w_p_1d against factorial brute force on uniform atom clouds."""
    t0 = time.perf_counter()
    tol = 1e-10 * tol_scale
    p_cycle = (1.0, 2.0, 3.0, 1.5)
    worst = 0.0
    for i in range(200):
        rng = stream(seed, 3, i)
        n = int(rng.integers(1, 7))
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        p = p_cycle[i % 4]
        best = min(
            sum(abs(xi - y[j]) ** p for xi, j in zip(x, perm)) / n
            for perm in itertools.permutations(range(n))
        ) ** (1.0 / p)
        got = ot1d.w_p_1d(ot1d.Slice1D.from_atoms(x), ot1d.Slice1D.from_atoms(y), p)
        worst = max(worst, abs(got - best))
    return _result("ot1d-brute", worst < tol, {"max_gap": worst}, f"< {tol:g}", t0)


def _reference_gaussian() -> measures.GridDensity:
    return measures.gaussian_density([[-2.0, 2.0], [-2.0, 2.0]], (256, 256), (0.0, 0.0), 0.35)


def check_radon_roundtrip(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """c_d f = R* Lambda_d R f on a Gaussian, relative L2."""
    t0 = time.perf_counter()
    f = _reference_gaussian()
    dirs = radon.make_directions(2, 180)
    g = radon.radon_grid(f, dirs, threads=threads)
    rec = radon.invert_radon(g, f.box, f.shape, threads=threads)
    rel = float(np.linalg.norm(rec.values - f.values) / np.linalg.norm(f.values))
    tol = 2e-2 * tol_scale
    return _result("radon-roundtrip", rel < tol, {"rel_l2": rel}, f"< {tol:g}", t0)


def check_fourier_slice(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """1D Fourier transform of a slice equals sqrt(2 pi) x the 2D transform."""
    t0 = time.perf_counter()
    f = _reference_gaussian()
    dirs = radon.make_directions(2, 180)
    gap = radon.fourier_slice_gap(f, dirs)
    tol = 1e-4 * tol_scale
    return _result("fourier-slice", gap < tol, {"max_gap": gap}, f"< {tol:g}", t0)


def _offset_gaussian_diff(n: int = 256) -> GridField:
    # Offsets +-0.5 are whole multiples of the cell size whenever n is a
    # multiple of 16, so the two bumps see identical sampling patterns and
    # their slice masses cancel exactly.
    box = np.asarray([[-4.0, 4.0], [-4.0, 4.0]])
    probe = GridField(box, np.zeros((n, n)))
    pts = probe.centers()
    sig2 = 2.0 * 0.6**2
    plus = np.exp(-(((pts[:, 0] - 0.5) ** 2) + pts[:, 1] ** 2) / sig2)
    minus = np.exp(-(((pts[:, 0] + 0.5) ** 2) + pts[:, 1] ** 2) / sig2)
    vals = ((plus - minus) / (math.pi * sig2)).reshape(n, n)
    return GridField(box, vals)


def check_isometry(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """|| f ||_{Hdot^{-3/2}(R^2)} vs || R f ||_{Hdot^{-1}} on the slice domain."""
    t0 = time.perf_counter()
    f = _offset_gaussian_diff()
    dirs = radon.make_directions(2, 180)
    gap = sobolev.isometry_gap(f, dirs, threads=threads)
    tol = 2e-2 * tol_scale
    return _result("isometry", gap < tol, {"rel_gap": gap}, f"< {tol:g}", t0)


def _bounded_density_pair(seed, j, box, shape):
    """Two densities on the unit square within [0.5, 1.5] x uniform, equal
    outside an interior region, with exactly unit mass."""
    probe = GridField(np.asarray(box, dtype=np.float64), np.zeros(shape))
    pts = probe.centers()
    rng = stream(seed, 7, j)

    def bump():
        c = rng.uniform(0.35, 0.65, size=2)
        s = rng.uniform(0.04, 0.06)
        return np.exp(-((pts - c) ** 2).sum(axis=1) / (2.0 * s * s))

    def tilt():
        g1, g2 = bump(), bump()
        raw = g1 - g2 * (g1.sum() / g2.sum())
        return raw / np.abs(raw).max()

    out = []
    for _ in range(2):
        vals = (1.0 + 0.5 * tilt()).reshape(shape)
        out.append(measures.GridDensity(probe.box, vals))
    return out


def check_sandwich_ac(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """Norm comparison near nice densities on the unit square:
    sqrt(1/(b C)) ||mu - nu||_{Hdot^{-3/2}} <= SW and the linear-path upper
    bound <= 2 sqrt(b/a) SW, with a = 0.5, b = 2, C = sqrt(2)."""
    t0 = time.perf_counter()
    box = [[0.0, 1.0], [0.0, 1.0]]
    shape = (128, 128)
    dirs = radon.make_directions(2, 180)
    a, b, c_lambda = 0.5, 2.0, math.sqrt(2.0)
    slack = 1.0 + 0.05 * tol_scale
    lower_const = math.sqrt(1.0 / (b * c_lambda))
    upper_const = 2.0 * math.sqrt(b / a)
    worst1 = -math.inf  # lower_const * ||diff|| / SW - can approach 1
    worst2 = -math.inf  # lsw_upper / (upper_const * SW)
    for j in range(10):
        mu, nu = _bounded_density_pair(seed, j, box, shape)
        diff = GridField(mu.box, mu.values - nu.values)
        hnorm = sobolev.hts_norm_grid(diff, -1.5, -1.5)
        sw = swdist.sw_p(mu, nu, 2.0, dirs, threads=threads)
        lsw = swdist.lsw_upper_linear(mu, nu, dirs, threads=threads)
        worst1 = max(worst1, lower_const * hnorm / sw)
        worst2 = max(worst2, lsw / (upper_const * sw))
    passed = worst1 <= slack and worst2 <= slack
    return _result(
        "sandwich-ac",
        passed,
        {"max_lower_ratio": worst1, "max_upper_ratio": worst2},
        f"both <= {slack:g}",
        t0,
    )


def check_discrete_comparison(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """Jitter experiment: (1/d) W^2 >= SW^2 always, and (1/d) W^2 / SW^2 -> 1."""
    t0 = time.perf_counter()
    mu = from_points([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    dirs = radon.make_directions(2, 64)
    eps_values = [0.1, 0.03, 0.01, 0.003]
    rows = stats.discrete_comparison(mu, eps_values, 30, seed, dirs)
    tol_neg = 1e-9 * tol_scale
    min_gap_val = min(r["w2_over_d"] - r["sw2"] for r in rows)
    max_ratio = {}
    for r in rows:
        max_ratio[r["eps"]] = max(max_ratio.get(r["eps"], 0.0), r["ratio2"] - 1.0)
    seq = [max_ratio[e] for e in eps_values]
    # small scales saturate at the machine floor, so compare with slack
    decreasing = all(y <= x + tol_neg for x, y in zip(seq, seq[1:]))
    final_tol = 0.05 * tol_scale
    passed = min_gap_val >= -tol_neg and decreasing and seq[-1] < final_tol
    return _result(
        "discrete-comparison",
        passed,
        {"min_gap": min_gap_val, "ratio_at_0.003": seq[-1], "ratio_at_0.1": seq[0]},
        f"gap >= -{tol_neg:g}, ratios decreasing, final < {final_tol:g}",
        t0,
    )


def check_midpoint_gap(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """No corner-supported SW midpoint for the swapped-diagonal pair, and the
    exact SW^2 value 2 - 4/pi of that pair."""
    t0 = time.perf_counter()
    mu0 = from_points([[-1.0, -1.0], [1.0, 1.0]])
    mu1 = from_points([[-1.0, 1.0], [1.0, -1.0]])
    corners = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
    gap = swdist.midpoint_gap(
        mu0, mu1, corners, radon.make_directions(2, 96), scan_resolution=8, polish_starts=4
    )
    sw2 = swdist.sw_p(mu0, mu1, 2.0, radon.make_directions(2, 720), threads=threads) ** 2
    sw2_err = abs(sw2 - (2.0 - 4.0 / math.pi))
    gap_floor = 0.05 / tol_scale
    sw2_tol = 1e-3 * tol_scale
    passed = gap > gap_floor and sw2_err < sw2_tol
    return _result(
        "midpoint-gap",
        passed,
        {"gap": gap, "sw2_err": sw2_err},
        f"gap > {gap_floor:g}, sw2 err < {sw2_tol:g}",
        t0,
    )


def check_metric_derivative(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """Central-difference metric derivative of a translating cloud equals
    |v| / sqrt(d)."""
    t0 = time.perf_counter()
    rng = stream(seed, 10)
    pts = rng.normal(size=(8, 2))
    v = np.asarray([0.3, -0.7])
    times = np.asarray([0.0, 0.05, 0.1])
    curve = swdist.CurveDiscretization(
        times, tuple(from_points(pts + t * v) for t in times)
    )
    dirs = radon.make_directions(2, 64)
    md = swdist.metric_derivative_fd(curve, 1, dirs, threads=threads)
    ratio = md * math.sqrt(2.0) / float(np.linalg.norm(v))
    half = 1e-3 * tol_scale
    passed = abs(ratio - 1.0) <= half
    return _result("metric-derivative", passed, {"ratio": ratio}, f"within {half:g} of 1", t0)


def check_dissipation(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """Energy dissipation identity <grad V, J> = c^{-2} || d/dr Lambda R V
    ||^2_{L^2(mu_hat)} for a Gaussian bump inside the uniform square."""
    t0 = time.perf_counter()
    v = _gaussian_potential((0.5, 0.5), 0.08, [[0.0, 1.0], [0.0, 1.0]], (256, 256))
    mu = measures.uniform_box_density([[0.0, 1.0], [0.0, 1.0]], (256, 256))
    dirs = radon.make_directions(2, 180)
    lhs, rhs = slopes.dissipation_check(v, mu, dirs, threads=threads)
    rel = abs(lhs - rhs) / rhs
    tol = 2e-2 * tol_scale
    return _result("dissipation", rel < tol, {"lhs": lhs, "rhs": rhs, "rel_gap": rel}, f"< {tol:g}", t0)


def check_slope_probe(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """Difference-quotient probe recovers sqrt(d) ||grad V||_{L^2(mu_n)}."""
    t0 = time.perf_counter()
    v = _gaussian_potential((0.0, 0.0), 0.25)
    rng = stream(seed, 12)
    mu = from_points(rng.uniform(-0.5, 0.5, size=(10, 2)))
    dirs = radon.make_directions(2, 128)
    probe = slopes.sw_slope_probe(v, mu, 1e-3, dirs)
    target = slopes.sw_slope_discrete(v, mu)
    rel = abs(probe - target) / target
    tol = 0.05 * tol_scale
    return _result("slope-probe", rel < tol, {"probe": probe, "target": target, "rel_gap": rel}, f"< {tol:g}", t0)


def check_rate(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """Empirical rate of SW(mu, mu_n): slope near -1/2, SW below the
    length-metric upper bound in every trial, and the high-probability bound
    with c = 4 holding in at least 99% of trials at n >= 256."""
    t0 = time.perf_counter()
    mu = measures.uniform_box_density([[0.0, 1.0], [0.0, 1.0]], (128, 128))
    dirs = radon.make_directions(2, 64)
    report = stats.rate_experiment(mu, [64, 256, 1024, 4096], 50, seed, dirs, threads=threads)
    lo, hi = -0.5 - 0.1 * tol_scale, -0.5 + 0.1 * tol_scale
    slope_ok = lo <= report.slope <= hi
    order_ok = bool((report.sw_values <= report.lsw_values + 1e-12).all())
    big = [i for i, n in enumerate(report.n_values) if n >= 256]
    inside = sum(
        (report.lsw_values[i] <= report.bound_values[i]).sum() for i in big
    )
    frac = inside / (len(big) * report.trials)
    frac_ok = frac >= 1.0 - 0.01 * tol_scale
    passed = slope_ok and order_ok and frac_ok
    return _result(
        "rate",
        passed,
        {"slope": report.slope, "bound_frac": frac, "order_ok": float(order_ok)},
        f"slope in [{lo:g}, {hi:g}], SW <= upper always, frac >= {1 - 0.01 * tol_scale:g}",
        t0,
    )


def check_sj2_cheeger(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """SJ2 and Cheeger reference values, and the 2M/h bound on the disk."""
    t0 = time.perf_counter()
    unif = ot1d.Slice1D.from_grid(0.0, 1.0, np.ones(512))
    sj2_err = abs(stats.sj2(unif) - 1.0 / 6.0)
    ch_err = abs(stats.cheeger_1d(unif) - 2.0)
    disk = measures.disk_density([[-1.05, 1.05], [-1.05, 1.05]], (256, 256), (0.0, 0.0), 1.0)
    dirs = radon.make_directions(2, 64)
    sj2_disk, bound = stats.sj2_cheeger_bound(disk, 1.0, dirs, threads=threads)
    tol_sj2, tol_ch = 1e-4 * tol_scale, 1e-3 * tol_scale
    passed = sj2_err < tol_sj2 and ch_err < tol_ch and sj2_disk <= bound
    return _result(
        "sj2-cheeger",
        passed,
        {"sj2_err": sj2_err, "cheeger_err": ch_err, "disk_sj2": sj2_disk, "disk_bound": bound},
        f"errs < {tol_sj2:g}/{tol_ch:g}, sj2 <= bound",
        t0,
    )


def _oscillatory_potential(box, shape) -> slopes.Potential:
    c = np.asarray([0.5, 0.5])
    sigma2 = 0.08**2
    omega = 240.0 * math.pi

    def amp(pts):
        return np.exp(-((pts - c) ** 2).sum(axis=1) / (2.0 * sigma2))

    def value(pts):
        return amp(pts) * np.sin(0.5 * omega * pts[:, 0]) ** 2

    def grad(pts):
        a = amp(pts)
        s2 = np.sin(0.5 * omega * pts[:, 0]) ** 2
        da = -(pts - c) / sigma2 * a[:, None]
        g = da * s2[:, None]
        g[:, 0] += a * 0.5 * omega * np.sin(omega * pts[:, 0])
        return g

    probe = GridField(np.asarray(box, dtype=np.float64), np.zeros(shape))
    field = GridField(probe.box, value(probe.centers()).reshape(shape))
    return slopes.Potential(value, grad, field)


def check_non_lsc(seed=0, threads=1, tol_scale=1.0) -> CheckResult:
    """Oscillation separates the geometries: the Hdot^{3/2} slope estimate
    dwarfs sqrt(d) w_slope at the uniform measure, while empirical atomic
    measures still see exactly sqrt(d) w_slope."""
    t0 = time.perf_counter()
    box = [[0.0, 1.0], [0.0, 1.0]]
    shape = (1024, 1024)
    v = _oscillatory_potential(box, shape)
    mu = measures.uniform_box_density(box, shape)
    wsl = slopes.w_slope(v, mu)
    hd = slopes.hdot_slope(v)
    ratio_osc = hd / (math.sqrt(2.0) * wsl)
    emp = measures.sample_empirical(mu, 10_000, seed, key=(15,))
    ratio_disc = slopes.sw_slope_discrete(v, emp) / (math.sqrt(2.0) * wsl)
    floor = 10.0 / tol_scale
    half = 0.1 * tol_scale
    passed = ratio_osc > floor and abs(ratio_disc - 1.0) <= half
    return _result(
        "non-lsc",
        passed,
        {"osc_ratio": ratio_osc, "discrete_ratio": ratio_disc},
        f"osc > {floor:g}, discrete within {half:g} of 1",
        t0,
    )


SUITE = {
    "identity-delta": check_identity_delta,
    "sw-vs-w": check_sw_vs_w,
    "ot1d-brute": check_ot1d_brute,
    "radon-roundtrip": check_radon_roundtrip,
    "fourier-slice": check_fourier_slice,
    "isometry": check_isometry,
    "sandwich-ac": check_sandwich_ac,
    "discrete-comparison": check_discrete_comparison,
    "midpoint-gap": check_midpoint_gap,
    "metric-derivative": check_metric_derivative,
    "dissipation": check_dissipation,
    "slope-probe": check_slope_probe,
    "rate": check_rate,
    "sj2-cheeger": check_sj2_cheeger,
    "non-lsc": check_non_lsc,
}


def run_check(name: str, seed=0, threads=1, tol_scale=1.0, **overrides) -> CheckResult:
    if name not in SUITE:
        raise KeyError(f"unknown check {name!r}; valid: {', '.join(SUITE)}")
    fn = SUITE[name]
    params = inspect.signature(fn).parameters
    bad = sorted(set(overrides) - set(params))
    if bad:
        raise ValueError(f"check {name!r} does not accept overrides: {', '.join(bad)}")
    return fn(seed=seed, threads=threads, tol_scale=tol_scale, **overrides)


def run_suite(names=None, seed=0, threads=1, tol_scale=1.0, **overrides):
    """Run several checks.  Overrides are forwarded only to checks whose
    signature accepts them, so broadcast runs stay usable."""
    picked = list(SUITE) if names is None else list(names)
    out = []
    for n in picked:
        fn = SUITE.get(n)
        if fn is None:
            raise KeyError(f"unknown check {n!r}; valid: {', '.join(SUITE)}")
        params = inspect.signature(fn).parameters
        kept = {k: v for k, v in overrides.items() if k in params}
        out.append(fn(seed=seed, threads=threads, tol_scale=tol_scale, **kept))
    return out
