"""Statistical functionals for sliced transport: the SJ2 functional, per-slice
Cheeger constants, empirical convergence-rate experiments, the relative-VC sup
statistic, and the discrete comparison experiment.

All Monte Carlo here derives per-trial generators from (seed, indices), so
results are bit-reproducible and independent of scheduling.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence

import numpy as np

from ._parallel import pmap
from .measures import DiscreteMeasure, GridDensity, min_gap, sample_empirical
from .ot1d import Slice1D, w_p_1d, weighted_hneg1
from .radon import (
    DirectionSet,
    default_r_grid,
    project_discrete,
    project_grid_exact,
    slices_from_field,
)

CLIP_LEVEL = 1e-12


def _clip_window() -> tuple:
    # roots of u(1-u) = CLIP_LEVEL, stable near 0
    lo = 2.0 * CLIP_LEVEL / (1.0 + math.sqrt(1.0 - 4.0 * CLIP_LEVEL))
    return lo, 1.0 - lo


def _sym_r_grid(field, n: int) -> np.ndarray:
    """Node set symmetric under negation (bitwise), same extent and spacing
    convention as default_r_grid.  Mirrored directions then see mirrored
    cells exactly, which keeps the direction-averaged functionals invariant
    under rigid motions that permute the direction set."""
    base = default_r_grid(field, n)
    dr = base[1] - base[0]
    return (np.arange(n) - (n - 1) / 2.0) * dr


def _grid_slice_parts(s: Slice1D):
    """Per-cell density values with mass accumulated from both ends.

    Returns (h, f, below, above) where below[j] is the mass strictly left of
    cell j and above[j] the mass from cell j rightward (so above[j + 1] is
    the right-tail survival at the cell's right edge).  Keeping a separate
    reverse accumulation gives the right tail full relative precision --
    1 - cumsum would bottom out at the ~1e-12 clip scale -- and makes every
    functional built on it invariant under slice reversal by construction.
    """
    if s.kind != "grid":
        raise ValueError("this functional needs a slice with a density")
    edges = s.grid_edges()
    h = edges[1] - edges[0]
    f = s.values
    mass = f * h
    below = np.concatenate(([0.0], np.cumsum(mass)))
    above = np.concatenate((np.cumsum(mass[::-1])[::-1], [0.0]))
    return h, f, below, above


def sj2_slice(s: Slice1D) -> float:
    """int F(1-F)/f dr for a single density slice over {F(1-F) > 1e-12}.

    Substituting u = F(r) turns each constant-density cell into an exact
    integral of u(1-u)/f^2, evaluated in whichever of u or the survival
    1 - u is small on that cell; a zero-density cell inside the clipped mass
    range makes the value +inf, as do atomic slices.
    """
    if s.kind == "atoms":
        return math.inf
    _, f, below, above = _grid_slice_parts(s)
    u_lo, u_hi = _clip_window()
    total = 0.0
    for j in range(f.size):
        if f[j] <= 0.0:
            # no mass here: infinite exactly when the constant CDF level
            # sits strictly inside the clipped window
            if below[j] > u_lo and above[j] > u_lo:
                return math.inf
            continue
        if below[j + 1] < above[j]:
            a, b = below[j], below[j + 1]  # lower-mass half: use u = F
        else:
            a, b = above[j + 1], above[j]  # upper half: use the survival
        a = max(a, u_lo)
        b = min(b, u_hi)
        if b <= a:
            continue
        total += ((b * b - a * a) / 2.0 - (b**3 - a**3) / 3.0) / f[j] ** 2
    return total


def sj2(m, dirs: Optional[DirectionSet] = None, *, r_grid=None, threads: int = 1) -> float:
    """Direction-averaged J2 functional sum_k w_k int F(1-F)/f dr.

    Accepts a 1D density slice directly, or a planar grid density (which is
    sliced through the Radon transform; `dirs` required).  Any atomic part
    makes the value +inf.
    """
    if isinstance(m, Slice1D):
        return sj2_slice(m)
    if isinstance(m, GridDensity):
        if dirs is None:
            raise ValueError("direction set required for multivariate input")
        rg = r_grid if r_grid is not None else _sym_r_grid(m, 1024)
        fam = slices_from_field(project_grid_exact(m, dirs, rg, threads=threads))
        vals = pmap(lambda k: sj2_slice(fam.slices[k]), range(dirs.n_dirs), threads)
        total = 0.0
        for k in range(dirs.n_dirs):
            if math.isinf(vals[k]):
                return math.inf
            total += dirs.weights[k] * vals[k]
        return total
    raise TypeError(f"unsupported input type {type(m)!r}")


def cheeger_1d(s: Slice1D) -> float:
    """Isoperimetric constant of a 1D density:
    essinf f / min(F, 1-F) over the region {F(1-F) > 1e-12}.

    Per cell the density is constant while min(F, 1-F) peaks either at a
    cell end or at 1/2 when the cell straddles the median, so the essinf is
    an exact minimum over cells.
    """
    _, f, below, above = _grid_slice_parts(s)
    u_lo, _ = _clip_window()
    best = math.inf
    for j in range(f.size):
        if f[j] <= 0.0:
            if below[j] > u_lo and above[j] > u_lo:
                return 0.0  # flat CDF inside the support: bottleneck
            continue
        if below[j + 1] <= u_lo or above[j] <= u_lo:
            continue  # cell entirely outside the clipped window
        if below[j + 1] < above[j + 1]:
            peak = below[j + 1]  # min(F, 1-F) = F, largest at the right edge
        elif above[j] < below[j]:
            peak = above[j]  # min(F, 1-F) = 1-F, largest at the left edge
        else:
            peak = 0.5  # the cell straddles the median
        best = min(best, f[j] / peak)
    return 0.0 if best == math.inf else best


def sj2_cheeger_bound(
    mu: GridDensity,
    m_radius: float,
    dirs: DirectionSet,
    *,
    r_grid=None,
    threads: int = 1,
) -> tuple:
    """(SJ2 value, 2M / min_k cheeger) for a density supported in B(0, M).

    The second entry dominates the first: per slice the Cheeger constant of
    the projection is at least the d-dimensional one, and the integration
    range is contained in [-M, M].
    """
    centers = mu.centers()
    supported = mu.values.ravel() > 0.0
    if supported.any():
        reach = float(np.sqrt((centers[supported] ** 2).sum(axis=1)).max())
        if reach > m_radius * (1.0 + 1e-12):
            raise ValueError(f"support reaches {reach:.6g}, beyond the stated radius {m_radius:g}")
    rg = r_grid if r_grid is not None else _sym_r_grid(mu, 1024)
    fam = slices_from_field(project_grid_exact(mu, dirs, rg, threads=threads))
    total = 0.0
    h_min = math.inf
    for k in range(dirs.n_dirs):
        v = sj2_slice(fam.slices[k])
        if math.isinf(v):
            total = math.inf
        elif not math.isinf(total):
            total += dirs.weights[k] * v
        h_min = min(h_min, cheeger_1d(fam.slices[k]))
    bound = math.inf if h_min <= 0.0 else 2.0 * m_radius / h_min
    return total, bound


# ---------------------------------------------------------------------------
# rate experiment
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class RateReport:
    """Monte Carlo record of SW(mu, mu_n) and its length-metric upper bound."""

    n_values: tuple
    sw_values: np.ndarray  # (len(n), trials)
    lsw_values: np.ndarray  # (len(n), trials)
    bound_values: tuple  # per n: sqrt(64 c log n / n) sqrt(SJ2)
    sj2_value: float
    c: float
    slope: float
    slope_stderr: float
    trials: int
    seed: int

    @property
    def sw_means(self) -> np.ndarray:
        return self.sw_values.mean(axis=1)

    @property
    def lsw_means(self) -> np.ndarray:
        return self.lsw_values.mean(axis=1)

    def quantiles(self, qs=(0.25, 0.5, 0.75)) -> dict:
        return {
            "sw": np.quantile(self.sw_values, qs, axis=1),
            "lsw": np.quantile(self.lsw_values, qs, axis=1),
        }

    def rows(self):
        """One (n, trial, sw, lsw_upper, bound) tuple per trial."""
        for i, n in enumerate(self.n_values):
            for t in range(self.trials):
                yield (n, t, self.sw_values[i, t], self.lsw_values[i, t], self.bound_values[i])


def rate_experiment(
    mu: GridDensity,
    n_values: Sequence[int],
    trials: int,
    seed: int,
    dirs: DirectionSet,
    *,
    r_grid=None,
    threads: int = 1,
) -> RateReport:
    """Empirical convergence-rate experiment.

    For each sample size, draws `trials` empirical measures, recording exact
    SW_2(mu, mu_n) (grid slice vs sorted atoms per direction) and the
    length-metric upper bound 2 (sum_k w_k int (F - F_n)^2 / f dr)^{1/2}
    from displacement interpolation along slices.  The comparison value is
    sqrt(64 c log n / n) sqrt(SJ2(mu)) with c = d + 2.
    """
    ns = tuple(int(n) for n in n_values)
    if any(b <= a for a, b in zip(ns, ns[1:])) or len(ns) < 2:
        raise ValueError("sample sizes must increase strictly (at least two)")
    if trials < 10:
        raise ValueError("at least 10 trials required")
    rg = r_grid if r_grid is not None else _sym_r_grid(mu, 512)
    fam = slices_from_field(project_grid_exact(mu, dirs, rg, threads=threads))
    sj2_val = 0.0
    for k in range(dirs.n_dirs):
        sj2_val += dirs.weights[k] * sj2_slice(fam.slices[k])
    if math.isinf(sj2_val):
        raise ValueError("SJ2 of the target measure is infinite")
    c = mu.dim + 2.0

    sw = np.zeros((len(ns), trials))
    lsw = np.zeros((len(ns), trials))

    def run_trial(args):
        i, t = args
        emp = sample_empirical(mu, ns[i], seed, key=(i, t))
        acc_sw = 0.0
        acc_h = 0.0
        for k in range(dirs.n_dirs):
            proj = project_discrete(emp, dirs.vectors[k])
            acc_sw += dirs.weights[k] * w_p_1d(fam.slices[k], proj, 2.0) ** 2
            acc_h += dirs.weights[k] * weighted_hneg1(fam.slices[k], proj, fam.slices[k]) ** 2
        return math.sqrt(acc_sw), 2.0 * math.sqrt(acc_h)

    jobs = [(i, t) for i in range(len(ns)) for t in range(trials)]
    results = pmap(run_trial, jobs, threads)
    for (i, t), (s, l) in zip(jobs, results):
        sw[i, t] = s
        lsw[i, t] = l

    bounds = tuple(math.sqrt(64.0 * c * math.log(n) / n) * math.sqrt(sj2_val) for n in ns)
    logn = np.log(np.asarray(ns, dtype=np.float64))
    logm = np.log(sw.mean(axis=1))
    if len(ns) >= 3:
        coef, cov = np.polyfit(logn, logm, 1, cov=True)
    else:
        # a two-point fit is exact; no residual to scale a covariance with
        coef = np.polyfit(logn, logm, 1)
        cov = np.full((2, 2), math.nan)
    return RateReport(
        n_values=ns,
        sw_values=sw,
        lsw_values=lsw,
        bound_values=bounds,
        sj2_value=sj2_val,
        c=c,
        slope=float(coef[0]),
        slope_stderr=float(math.sqrt(max(cov[0, 0], 0.0))),
        trials=trials,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# relative-VC statistic
# ---------------------------------------------------------------------------


def vc_bound(n: int, d: int, eps: float) -> float:
    """Tail bound 8 (2n+1)^{d+1} exp(-n eps^2 / 16); vacuous when >= 1."""
    return 8.0 * (2.0 * n + 1.0) ** (d + 1) * math.exp(-n * eps**2 / 16.0)


def vc_eps_at(n: int, d: int, level: float) -> float:
    """Threshold where the tail bound equals `level`."""
    return math.sqrt(16.0 / n * math.log(8.0 * (2.0 * n + 1.0) ** (d + 1) / level))


@dataclasses.dataclass(frozen=True)
class VCReport:
    sup_values: np.ndarray
    n: int
    dim: int
    trials: int
    seed: int

    def exceedance(self, eps: float) -> float:
        return float((self.sup_values > eps).mean())

    def bound(self, eps: float) -> float:
        return vc_bound(self.n, self.dim, eps)


def vc_statistic(
    mu: GridDensity,
    n: int,
    trials: int,
    seed: int,
    dirs: DirectionSet,
    *,
    r_grid=None,
    threads: int = 1,
) -> VCReport:
    """Distribution over trials of sup_{r,theta} |F - F_n| / sqrt(F(1-F)).

    Between sample points the normalized gap is monotone in F on either side
    of its zero, so the sup over r is attained at sample positions (both
    one-sided empirical values); the sup is restricted to {F(1-F) > 1e-12}.
    """
    rg = r_grid if r_grid is not None else _sym_r_grid(mu, 1024)
    fam = slices_from_field(project_grid_exact(mu, dirs, rg, threads=threads))
    u_lo, u_hi = _clip_window()

    edges = [s.grid_edges() for s in fam.slices]
    cums = []
    for s in fam.slices:
        h = s.grid_edges()[1] - s.grid_edges()[0]
        cums.append(np.concatenate([[0.0], np.cumsum(s.values) * h]))

    def slice_cdf(k: int, r: np.ndarray) -> np.ndarray:
        return np.interp(r, edges[k], cums[k], left=0.0, right=cums[k][-1])

    def run_trial(t: int) -> float:
        emp = sample_empirical(mu, n, seed, key=(t,))
        best = 0.0
        for k in range(dirs.n_dirs):
            proj = project_discrete(emp, dirs.vectors[k])
            pos = proj.positions
            fn_right = np.cumsum(proj.weights)
            fn_left = fn_right - proj.weights
            f_here = slice_cdf(k, pos)
            denom2 = f_here * (1.0 - f_here)
            ok = denom2 > CLIP_LEVEL
            if not ok.any():
                continue
            gap = np.maximum(np.abs(f_here - fn_left), np.abs(f_here - fn_right))
            best = max(best, float((gap[ok] / np.sqrt(denom2[ok])).max()))
        return best

    sups = np.asarray(pmap(run_trial, range(trials), threads))
    return VCReport(sups, n, mu.dim, trials, seed)


# ---------------------------------------------------------------------------
# discrete comparison
# ---------------------------------------------------------------------------


def discrete_comparison(
    mu: DiscreteMeasure,
    eps_values: Sequence[float],
    trials: int,
    seed: int,
    dirs: DirectionSet,
) -> list:
    """Jitter experiment around a discrete measure.

    For each eps, draws `trials` perturbations nu with every atom moved
    uniformly in the ball B(0, eps) (weights preserved), and records exact
    W2, W_inf and SW^2.  Rows are dicts with keys
    eps, trial, w2_over_d, sw2, winfty, ratio1, ratio2 where
    ratio1 = ((1/d) W^2 - SW^2) / (W_inf SW^2) and ratio2 = (1/d) W^2 / SW^2.

    Uniform weights are required (the exact W_inf computation is a bipartite
    bottleneck matching); eps must stay below a quarter of the minimal atom
    gap so the perturbations remain in the regime where the comparison
    theorem applies.
    """
    from .measures import stream, winfty_discrete
    from .swdist import sw_p, w2_discrete

    gap = min_gap(mu)
    if gap <= 0:
        raise ValueError("atoms must be distinct")
    if not np.allclose(mu.weights, 1.0 / mu.n_atoms, rtol=0, atol=1e-12):
        raise ValueError("comparison experiment requires uniform weights")
    eps_values = [float(e) for e in eps_values]
    for e in eps_values:
        if not 0 < e < gap / 4.0:
            raise ValueError(f"eps {e:g} outside (0, min-gap/4 = {gap / 4.0:g})")

    d = mu.dim
    rows = []
    for ei, eps in enumerate(eps_values):
        for t in range(trials):
            rng = stream(seed, ei, t)
            direction = rng.standard_normal((mu.n_atoms, d))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            radius = eps * rng.random(mu.n_atoms) ** (1.0 / d)
            nu = DiscreteMeasure(mu.points + radius[:, None] * direction, mu.weights)
            w2 = w2_discrete(mu, nu)
            sw2 = sw_p(mu, nu, 2.0, dirs) ** 2
            winf = winfty_discrete(mu, nu)
            w2_over_d = w2**2 / d
            if sw2 > 0 and winf > 0:
                ratio1 = (w2_over_d - sw2) / (winf * sw2)
                ratio2 = w2_over_d / sw2
            else:
                ratio1 = 0.0
                ratio2 = 1.0
            rows.append(
                {
                    "eps": eps,
                    "trial": t,
                    "w2_over_d": w2_over_d,
                    "sw2": sw2,
                    "winfty": winf,
                    "ratio1": ratio1,
                    "ratio2": ratio2,
                }
            )
    return rows
