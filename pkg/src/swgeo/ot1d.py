"""Exact one-dimensional optimal transport.

Both slice representations used here (sorted atoms, piecewise-constant grid
densities) have piecewise-linear quantile functions, so the quantile-domain
integral behind W_p is computed in closed form on merged breakpoints; no
quadrature error enters anywhere in this module.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Tuple

import numpy as np

MASS_TOL = 1e-12
CLIP_LEVEL = 1e-12  # integration domain clip: F_sigma (1 - F_sigma) > this


# ---------------------------------------------------------------------------
# slices
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class Slice1D:
    """A probability measure on the line: atoms or a grid density.

    Exactly one representation is populated.  Atom positions are sorted,
    grid values are nonnegative, total mass is 1 within 1e-12.
    """

    kind: str  # "atoms" | "grid"
    positions: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    lo: Optional[float] = None
    hi: Optional[float] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "atoms":
            pos = np.ascontiguousarray(self.positions, dtype=np.float64)
            w = np.ascontiguousarray(self.weights, dtype=np.float64)
            if pos.ndim != 1 or pos.size == 0 or w.shape != pos.shape:
                raise ValueError("atoms need matching 1D positions and weights")
            if not np.all(np.isfinite(pos)):
                raise ValueError("non-finite atom position")
            if np.any(np.diff(pos) < 0):
                raise ValueError("atom positions must be sorted ascending")
            if np.any(w <= 0):
                raise ValueError("atom weights must be positive")
            if abs(w.sum() - 1.0) > MASS_TOL:
                raise ValueError("atom weights must sum to 1 within 1e-12")
            pos.setflags(write=False)
            w.setflags(write=False)
            object.__setattr__(self, "positions", pos)
            object.__setattr__(self, "weights", w)
        elif self.kind == "grid":
            v = np.ascontiguousarray(self.values, dtype=np.float64)
            lo, hi = float(self.lo), float(self.hi)
            if v.ndim != 1 or v.size < 1 or not np.all(np.isfinite(v)):
                raise ValueError("grid slice needs a finite 1D value array")
            if np.any(v < 0):
                raise ValueError("grid slice values must be nonnegative")
            if hi <= lo:
                raise ValueError("grid slice needs hi > lo")
            mass = v.sum() * (hi - lo) / v.size
            if abs(mass - 1.0) > MASS_TOL:
                raise ValueError("grid slice mass must be 1 within 1e-12")
            v.setflags(write=False)
            object.__setattr__(self, "values", v)
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
        else:
            raise ValueError(f"unknown slice kind {self.kind!r}")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_atoms(positions, weights=None) -> "Slice1D":
        pos = np.ascontiguousarray(positions, dtype=np.float64).ravel()
        if weights is None:
            w = np.full(pos.size, 1.0 / max(pos.size, 1))
        else:
            w = np.ascontiguousarray(weights, dtype=np.float64).ravel()
            total = w.sum()
            if total <= 0 or np.any(w < 0):
                raise ValueError("weights must be nonnegative with positive total")
            w = w / total
        order = np.argsort(pos, kind="stable")
        pos, w = pos[order], w[order]
        keep = w > 0
        return Slice1D("atoms", positions=pos[keep], weights=w[keep])

    @staticmethod
    def from_grid(lo, hi, values, normalize: bool = True) -> "Slice1D":
        v = np.ascontiguousarray(values, dtype=np.float64).ravel()
        if normalize:
            mass = v.sum() * (float(hi) - float(lo)) / v.size
            if mass <= 0:
                raise ValueError("grid slice has no mass")
            v = v / mass
        return Slice1D("grid", lo=float(lo), hi=float(hi), values=v)

    # -- basic descriptors --------------------------------------------------

    def mean(self) -> float:
        if self.kind == "atoms":
            return float(np.dot(self.weights, self.positions))
        h = (self.hi - self.lo) / self.values.size
        centers = self.lo + h * (np.arange(self.values.size) + 0.5)
        return float(np.dot(self.values, centers) * h)

    def grid_edges(self) -> np.ndarray:
        if self.kind != "grid":
            raise ValueError("grid_edges only defined for grid slices")
        return np.linspace(self.lo, self.hi, self.values.size + 1)


# ---------------------------------------------------------------------------
# quantile machinery
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class QuantileBreaks:
    """Piecewise-linear quantile function of a Slice1D.

    On (u[i-1], u[i]] the quantile runs linearly from qlo[i-1] to qhi[i-1];
    atoms give constant pieces (qlo == qhi), zero-density gaps appear as
    jumps between consecutive pieces.
    """

    u: np.ndarray  # (m+1,) with u[0] = 0, u[-1] = 1, strictly increasing
    qlo: np.ndarray  # (m,)
    qhi: np.ndarray  # (m,)

    def __post_init__(self):
        u = np.ascontiguousarray(self.u, dtype=np.float64)
        qlo = np.ascontiguousarray(self.qlo, dtype=np.float64)
        qhi = np.ascontiguousarray(self.qhi, dtype=np.float64)
        if u.ndim != 1 or u.size < 2 or qlo.shape != (u.size - 1,) or qhi.shape != qlo.shape:
            raise ValueError("inconsistent quantile break arrays")
        if u[0] != 0.0 or abs(u[-1] - 1.0) > MASS_TOL or np.any(np.diff(u) <= 0):
            raise ValueError("breakpoints must increase strictly from 0 to 1")
        if np.any(qhi < qlo) or np.any(qlo[1:] < qhi[:-1]):
            raise ValueError("quantile function must be nondecreasing")
        for name, arr in (("u", u), ("qlo", qlo), ("qhi", qhi)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _strict_cum(mass: np.ndarray):
    """Normalized cumulative masses with zero-increment entries dropped.

    A piece whose mass is below one ulp of the running sum produces a
    repeated breakpoint; it carries no quantile mass, so dropping it leaves
    the function unchanged while restoring strict monotonicity.
    """
    cum = np.cumsum(mass)
    cum = cum / cum[-1]
    keep = np.diff(np.concatenate(([0.0], cum))) > 0
    return cum[keep], keep


def quantile_breaks(s: Slice1D) -> QuantileBreaks:
    if s.kind == "atoms":
        cum, keep = _strict_cum(s.weights)
        u = np.concatenate(([0.0], cum))
        u[-1] = 1.0
        return QuantileBreaks(u, s.positions[keep], s.positions[keep])
    # grid: only cells with positive mass contribute pieces
    n = s.values.size
    h = (s.hi - s.lo) / n
    mass = s.values * h
    pos = np.nonzero(mass > 0)[0]
    if pos.size == 0:
        raise ValueError("grid slice has no mass")
    cum, keep = _strict_cum(mass[pos])
    pos = pos[keep]
    u = np.concatenate(([0.0], cum))
    u[-1] = 1.0
    # identical expressions keep qhi[i] == qlo[i+1] bit-exact for adjacent
    # cells; `edges_lo + h` can drift a ulp and break monotonicity
    return QuantileBreaks(u, s.lo + h * pos, s.lo + h * (pos + 1))


def eval_quantile(qb: QuantileBreaks, u) -> np.ndarray:
    """Generalized inverse F^{-1}(u) = inf{r : F(r) >= u}; F^{-1}(0) is the
    leftmost support point."""
    uq = np.atleast_1d(np.asarray(u, dtype=np.float64))
    if np.any((uq < 0) | (uq > 1)):
        raise ValueError("quantile query must lie in [0, 1]")
    idx = np.searchsorted(qb.u, uq, side="left")
    idx = np.clip(idx, 1, qb.u.size - 1) - 1
    ua, ub = qb.u[idx], qb.u[idx + 1]
    t = (uq - ua) / (ub - ua)
    out = qb.qlo[idx] + (qb.qhi[idx] - qb.qlo[idx]) * np.clip(t, 0.0, 1.0)
    return out


def _segment_values(qb: QuantileBreaks, a: np.ndarray, b: np.ndarray):
    """Quantile values at the open-interval ends (a+, b-) for merged
    subintervals (a, b) that each lie inside a single piece of qb."""
    mid = 0.5 * (a + b)
    idx = np.searchsorted(qb.u, mid, side="left") - 1
    idx = np.clip(idx, 0, qb.u.size - 2)
    ua, ub = qb.u[idx], qb.u[idx + 1]
    slope = (qb.qhi[idx] - qb.qlo[idx]) / (ub - ua)
    va = qb.qlo[idx] + slope * (a - ua)
    vb = qb.qlo[idx] + slope * (b - ua)
    return va, vb


def _merged_intervals(qa: QuantileBreaks, qbq: QuantileBreaks):
    u = np.union1d(qa.u, qbq.u)
    a, b = u[:-1], u[1:]
    va0, vb0 = _segment_values(qa, a, b)
    va1, vb1 = _segment_values(qbq, a, b)
    return b - a, va0 - va1, vb0 - vb1


def _abs_power_mean(A: np.ndarray, B: np.ndarray, p: float) -> np.ndarray:
    """Exact (1/(b-a)) * int_a^b |A + (B-A)t|^p dt over t in [0,1]."""
    if p == 1.0:
        same = A * B >= 0
        return np.where(same, 0.5 * (np.abs(A) + np.abs(B)),
                        0.5 * (A * A + B * B) / np.abs(B - A + (same * 1.0)))
    if p == 2.0:
        return (A * A + A * B + B * B) / 3.0
    diff = B - A
    scale = np.abs(A) + np.abs(B)
    degenerate = np.abs(diff) <= 1e-12 * (scale + 1e-300)
    safe = np.where(degenerate, 1.0, diff)
    exact = (np.abs(B) ** p * B - np.abs(A) ** p * A) / (safe * (p + 1.0))
    return np.where(degenerate, np.abs(0.5 * (A + B)) ** p, exact)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def cdf_quantile(s: Slice1D, mode: str, query) -> float:
    """Right-continuous CDF or generalized-inverse quantile at one point."""
    if mode == "cdf":
        return float(cdf_eval(s, np.asarray([query], dtype=np.float64))[0])
    if mode == "quantile":
        q = float(query)
        if not (0.0 <= q <= 1.0):
            raise ValueError("quantile query outside [0, 1]")
        return float(eval_quantile(quantile_breaks(s), q)[0])
    raise ValueError(f"mode must be 'cdf' or 'quantile', got {mode!r}")


def cdf_eval(s: Slice1D, r: np.ndarray) -> np.ndarray:
    """Vectorized right-continuous CDF."""
    r = np.asarray(r, dtype=np.float64)
    if s.kind == "atoms":
        cum = np.concatenate(([0.0], np.cumsum(s.weights)))
        cum = cum / cum[-1]
        return cum[np.searchsorted(s.positions, r, side="right")]
    n = s.values.size
    h = (s.hi - s.lo) / n
    cum = np.concatenate(([0.0], np.cumsum(s.values * h)))
    cum = cum / cum[-1]
    pos = np.clip((r - s.lo) / h, 0.0, n)
    cell = np.minimum(pos.astype(np.int64), n - 1)
    frac = pos - cell
    return cum[cell] + (cum[cell + 1] - cum[cell]) * np.clip(frac, 0.0, 1.0)


def w_p_1d(mu: Slice1D, nu: Slice1D, p: float = 2.0) -> float:
    """(int_0^1 |F_mu^{-1} - F_nu^{-1}|^p du)^{1/p}, exact on this class."""
    p = float(p)
    if p < 1.0:
        raise ValueError("w_p_1d requires p >= 1")
    if math.isinf(p):
        return w_infty_1d(mu, nu)
    L, A, B = _merged_intervals(quantile_breaks(mu), quantile_breaks(nu))
    total = float(np.dot(L, _abs_power_mean(A, B, p)))
    return total ** (1.0 / p)


def w_infty_1d(mu: Slice1D, nu: Slice1D) -> float:
    """sup_{u in (0,1)} |F_mu^{-1}(u) - F_nu^{-1}(u)|."""
    _, A, B = _merged_intervals(quantile_breaks(mu), quantile_breaks(nu))
    return float(max(np.abs(A).max(), np.abs(B).max()))


def displacement_1d(mu: Slice1D, nu: Slice1D, t: float) -> Slice1D:
    """Displacement interpolation at time t along the monotone coupling.

    Implemented for atomic slices (the pushforward is again atomic, with at
    most merged-breakpoint many atoms).  Slices with a density part raise:
    their interpolant leaves the piecewise-constant class.
    """
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise ValueError("interpolation time outside [0, 1]")
    if mu.kind != "atoms" or nu.kind != "atoms":
        raise ValueError("displacement_1d requires atomic slices")
    qa, qb = quantile_breaks(mu), quantile_breaks(nu)
    u = np.union1d(qa.u, qb.u)
    a, b = u[:-1], u[1:]
    va0, _ = _segment_values(qa, a, b)
    va1, _ = _segment_values(qb, a, b)
    pos = (1.0 - t) * va0 + t * va1
    return Slice1D.from_atoms(pos, b - a)


def weighted_hneg1(
    mu: Slice1D,
    nu: Slice1D,
    sigma: Slice1D,
    *,
    return_diagnostics: bool = False,
):
    """Weighted negative-Sobolev norm (int (F_mu - F_nu)^2 / f_sigma dr)^{1/2}.

    sigma must carry a grid density.  The integration domain is clipped to
    {F_sigma (1 - F_sigma) > 1e-12} with the convention 0/0 = 0.  A CDF gap
    above 1e-6 where f_sigma vanishes exactly (zero-density holes, or mass of
    mu/nu outside sigma's support) makes the true integral blow up, so the
    value is reported as +inf; the clipped quantile tails only enter the
    diagnostics (clipped sigma mass and the largest gap seen there).
    """
    if sigma.kind != "grid":
        raise ValueError("weighted_hneg1 needs a grid-density weight slice")
    edges = sigma.grid_edges()
    h = edges[1] - edges[0]
    dens = sigma.values

    # clip window from the weight CDF
    u_lo = CLIP_LEVEL  # u (1-u) > 1e-12 boundary, to first order
    qb_sigma = quantile_breaks(sigma)
    r_lo = float(eval_quantile(qb_sigma, u_lo)[0])
    r_hi = float(eval_quantile(qb_sigma, 1.0 - u_lo)[0])

    # breakpoints: sigma cell edges plus every point where F_mu or F_nu kinks
    cuts = [edges]
    for s in (mu, nu):
        if s.kind == "atoms":
            cuts.append(s.positions)
        else:
            cuts.append(s.grid_edges())
    cuts.append(np.asarray([r_lo, r_hi]))
    pts = np.unique(np.concatenate(cuts))
    a, b = pts[:-1], pts[1:]
    ga = cdf_eval(mu, a) - cdf_eval(nu, a)
    gb = cdf_eval(mu, b) - cdf_eval(nu, b)
    # (F_mu - F_nu) is linear on each subinterval
    seg = (b - a) * (ga * ga + ga * gb + gb * gb) / 3.0

    mid = 0.5 * (a + b)
    cell = np.clip(((mid - sigma.lo) / h).astype(np.int64), 0, dens.size - 1)
    f_mid = np.where((mid >= sigma.lo) & (mid <= sigma.hi), dens[cell], 0.0)
    in_window = (mid >= r_lo) & (mid <= r_hi)
    inside = in_window & (f_mid > 0)

    value_sq = float(np.sum(seg[inside] / f_mid[inside]))

    # divergence test: a non-negligible CDF gap over zero-density segments
    # (0/0 = 0 only covers a matching-mass gap)
    gap = np.maximum(np.abs(ga), np.abs(gb))
    zero_density = f_mid == 0.0
    zero_density_gap = float(gap[zero_density].max()) if np.any(zero_density) else 0.0
    # mass of mu or nu strictly outside sigma's grid extent never enters the
    # `pts` subintervals, so check the CDF gap at the extent ends too
    for r_end, u_end in ((edges[0], 0.0), (edges[-1], 1.0)):
        d_mu = float(cdf_eval(mu, np.asarray([r_end]))[0]) - u_end
        d_nu = float(cdf_eval(nu, np.asarray([r_end]))[0]) - u_end
        zero_density_gap = max(zero_density_gap, abs(d_mu - d_nu))

    divergent = zero_density_gap > 1e-6
    value = math.inf if divergent else math.sqrt(value_sq)
    if return_diagnostics:
        sig_cdf = cdf_eval(sigma, np.asarray([r_lo, r_hi]))
        clipped = ~in_window
        return value, {
            "clip_window": (r_lo, r_hi),
            "clipped_sigma_mass": float(sig_cdf[0] + (1.0 - sig_cdf[1])),
            "clipped_cdf_gap": float(gap[clipped].max()) if np.any(clipped) else 0.0,
            "zero_density_cdf_gap": zero_density_gap,
            "divergent": divergent,
        }
    return value
