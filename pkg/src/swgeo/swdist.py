"""Sliced Wasserstein distances, curves, and the non-geodesic certificate.

The direction average always uses the normalized (probability) weights of a
DirectionSet, so sliced quantities here are comparable across direction
counts and schemes.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize

from ._parallel import pmap
from .measures import MASS_TOL_DISCRETE, DiscreteMeasure, GridDensity
from .ot1d import Slice1D, displacement_1d, w_p_1d, weighted_hneg1
from .radon import (
    DirectionSet,
    SliceMeasureFamily,
    SlicedField,
    default_r_grid,
    project_discrete,
    radon_grid,
    slices_from_field,
    smooth_project,
)

MeasureLike = Union[DiscreteMeasure, GridDensity]

W2_SUPPORT_CAP = 512
COST_QUANT = 1e-9  # relative cost quantization for the min-cost-flow path
MASS_QUANT = 1e-12


# ---------------------------------------------------------------------------
# slicing helpers
# ---------------------------------------------------------------------------


def _slice_family(m: MeasureLike, dirs: DirectionSet, r_grid) -> Sequence[Slice1D]:
    if isinstance(m, DiscreteMeasure):
        return [project_discrete(m, dirs.vectors[k]) for k in range(dirs.n_dirs)]
    if isinstance(m, GridDensity):
        return slices_from_field(radon_grid(m, dirs, r_grid)).slices
    raise TypeError(f"unsupported measure type {type(m)!r}")


def _shared_r_grid(mu: MeasureLike, nu: MeasureLike, dirs, r_grid):
    if r_grid is not None:
        return np.asarray(r_grid, dtype=np.float64)
    grids = [m for m in (mu, nu) if isinstance(m, GridDensity)]
    if not grids:
        return None
    widest = max(grids, key=lambda m: float(np.abs(m.box).max()))
    return default_r_grid(widest)


def sw_p(
    mu: MeasureLike,
    nu: MeasureLike,
    p: float,
    dirs: DirectionSet,
    *,
    r_grid: Optional[np.ndarray] = None,
    threads: int = 1,
) -> float:
    """Sliced p-Wasserstein distance
    ( sum_k w_k W_p^p(mu^theta_k, nu^theta_k) )^{1/p}.

    Atom clouds are projected exactly; grid densities go through the grid
    Radon transform (slices renormalized to unit mass), and mixed pairs
    combine both, with the slice-level distance exact in every case.
    """
    p = float(p)
    if p < 1.0:
        raise ValueError("sw_p requires p >= 1")
    if mu.dim != nu.dim:
        raise ValueError("dimension mismatch")
    rg = _shared_r_grid(mu, nu, dirs, r_grid)
    su = _slice_family(mu, dirs, rg)
    sv = _slice_family(nu, dirs, rg)
    vals = pmap(lambda k: w_p_1d(su[k], sv[k], p) ** p, range(dirs.n_dirs), threads)
    acc = 0.0
    for k in range(dirs.n_dirs):
        acc += dirs.weights[k] * vals[k]
    return acc ** (1.0 / p)


# ---------------------------------------------------------------------------
# exact discrete W2
# ---------------------------------------------------------------------------


def _w2_uniform_assignment(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    diff = mu.points[:, None, :] - nu.points[None, :, :]
    cost = np.einsum("ijk,ijk->ij", diff, diff)
    rows, cols = linear_sum_assignment(cost)
    return math.sqrt(cost[rows, cols].mean())


def _w2_flow(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    import networkx as nx

    diff = mu.points[:, None, :] - nu.points[None, :, :]
    cost = np.einsum("ijk,ijk->ij", diff, diff)
    cmax = float(cost.max())
    cost_int = np.rint(cost / max(cmax, 1e-300) / COST_QUANT).astype(np.int64)

    def quantized_masses(w):
        q = np.rint(w / MASS_QUANT).astype(np.int64)
        q[np.argmax(q)] += int(round(1.0 / MASS_QUANT)) - int(q.sum())
        return q

    supply = quantized_masses(mu.weights)
    demand = quantized_masses(nu.weights)
    g = nx.DiGraph()
    for i, s in enumerate(supply):
        g.add_node(("u", i), demand=-int(s))
    for j, t in enumerate(demand):
        g.add_node(("v", j), demand=int(t))
    for i in range(mu.n_atoms):
        for j in range(nu.n_atoms):
            g.add_edge(("u", i), ("v", j), weight=int(cost_int[i, j]))
    _, flow = nx.network_simplex(g)
    total = 0.0
    for i in range(mu.n_atoms):
        for j, amount in flow[("u", i)].items():
            if amount:
                total += amount * MASS_QUANT * cost[i, j[1]]
    return math.sqrt(total)


def w2_discrete(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Exact 2-Wasserstein distance between small atom clouds.

    Equal-size uniform clouds reduce to an assignment problem (solved
    exactly in floats); general weights go through integer min-cost flow
    with 1e-9 relative cost quantization, evaluating the returned plan
    against the float costs.
    """
    if mu.dim != nu.dim:
        raise ValueError("dimension mismatch")
    if mu.n_atoms > W2_SUPPORT_CAP or nu.n_atoms > W2_SUPPORT_CAP:
        raise ValueError(f"w2_discrete supports at most {W2_SUPPORT_CAP} atoms per side")
    n = mu.n_atoms
    if nu.n_atoms == n:
        uniform = np.full(n, 1.0 / n)
        if (
            np.abs(mu.weights - uniform).max() <= MASS_TOL_DISCRETE
            and np.abs(nu.weights - uniform).max() <= MASS_TOL_DISCRETE
        ):
            return _w2_uniform_assignment(mu, nu)
    return _w2_flow(mu, nu)


# ---------------------------------------------------------------------------
# linear-path upper bound for the length metric
# ---------------------------------------------------------------------------


def lsw_upper_linear(
    mu: MeasureLike,
    nu: MeasureLike,
    dirs: DirectionSet,
    *,
    r_grid: Optional[np.ndarray] = None,
    bandwidth: Optional[float] = None,
    threads: int = 1,
) -> float:
    """Linear-interpolation upper bound for the intrinsic sliced metric:
    2 sum_k w_k || mu^theta - nu^theta ||_{Hdot^{-1}(mu^theta)}.

    Needs a density on every mu slice: grid inputs get it from the Radon
    transform, atom clouds require a smoothing `bandwidth`.  The true length
    metric is only bracketed: sw_p(mu, nu, 2) <= length <= this value.
    """
    rg = _shared_r_grid(mu, nu, dirs, r_grid)

    def densified(m: MeasureLike):
        if isinstance(m, GridDensity):
            return _slice_family(m, dirs, rg)
        if bandwidth is None:
            raise ValueError("atom-cloud inputs need a smoothing bandwidth")
        grid = rg if rg is not None else _atom_r_grid(mu, nu)
        return smooth_project(m, dirs, grid, bandwidth).slices

    su = densified(mu)
    sv = densified(nu)
    vals = pmap(lambda k: weighted_hneg1(sv[k], su[k], su[k]), range(dirs.n_dirs), threads)
    acc = 0.0
    for k in range(dirs.n_dirs):
        acc += dirs.weights[k] * vals[k]
    return 2.0 * acc


def _atom_r_grid(mu: MeasureLike, nu: MeasureLike) -> np.ndarray:
    from .radon import make_r_grid

    radius = 0.0
    for m in (mu, nu):
        if isinstance(m, DiscreteMeasure):
            radius = max(radius, float(np.sqrt((m.points**2).sum(axis=1)).max()))
    return make_r_grid(1.5 * max(radius, 1.0), 512)


# ---------------------------------------------------------------------------
# Benamou-Brenier action
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class SlicedFlux:
    """Vector-valued field on the slice domain plus its reference measure.

    `components[i]` holds the i-th Cartesian component as a SlicedField;
    fluxes constructed from gradients are parallel to theta, so the scalar
    theta . J determines them (see `parallel`)."""

    components: tuple
    reference: SliceMeasureFamily

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != comps[0].directions.dim:
            raise ValueError("need one component per space dimension")
        for c in comps:
            if not isinstance(c, SlicedField):
                raise TypeError("components must be SlicedField instances")
            if c.values.shape != comps[0].values.shape:
                raise ValueError("components must share direction and r grids")
        object.__setattr__(self, "components", comps)

    @staticmethod
    def parallel(scalar: SlicedField, reference: SliceMeasureFamily) -> "SlicedFlux":
        """Flux theta * scalar(theta, r) (the gradient-generated class)."""
        comps = tuple(
            scalar.with_values(scalar.directions.vectors[:, i : i + 1] * scalar.values)
            for i in range(scalar.directions.dim)
        )
        return SlicedFlux(comps, reference)

    def theta_component(self) -> np.ndarray:
        th = self.components[0].directions.vectors
        return sum(th[:, i : i + 1] * self.components[i].values for i in range(th.shape[1]))


def b_sw(mu_hat: SliceMeasureFamily, flux: SlicedFlux, *, density_floor: float = 1e-12) -> float:
    """Benamou-Brenier action sum_k w_k int |theta_k . J / mu|^2 dmu.

    0/0 counts as 0; flux sitting where the reference density is below
    `density_floor` (relative to the slice max) is an absolute-continuity
    failure and yields +inf.
    """
    dirs = flux.components[0].directions
    r = flux.components[0].r_grid
    dr = float(r[1] - r[0])
    tj = flux.theta_component()
    acc = 0.0
    for k in range(dirs.n_dirs):
        s = mu_hat.slices[k]
        if s.kind != "grid" or s.values.size != r.size:
            raise ValueError("reference slices must be grid densities on the flux r grid")
        dens = s.values
        floor = density_floor * max(float(dens.max()), 1e-300)
        jk = tj[k]
        dead = dens <= floor
        if np.any(dead & (np.abs(jk) > density_floor * max(1.0, float(np.abs(jk).max())))):
            return math.inf
        ratio2 = np.zeros_like(jk)
        alive = ~dead
        ratio2[alive] = (jk[alive] / dens[alive]) ** 2
        acc += dirs.weights[k] * float((ratio2 * dens).sum() * dr)
    return acc


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class CurveDiscretization:
    """Measures mu_{t_0}, ..., mu_{t_M} along strictly increasing times."""

    times: np.ndarray
    measures: tuple

    def __post_init__(self):
        t = np.ascontiguousarray(self.times, dtype=np.float64)
        ms = tuple(self.measures)
        if t.ndim != 1 or t.size != len(ms) or t.size < 2:
            raise ValueError("need one measure per time, at least two nodes")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must increase strictly")
        kinds = {type(m) for m in ms}
        if len(kinds) != 1:
            raise ValueError("curve must hold a single measure kind")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "measures", ms)


def curve_length(c: CurveDiscretization, dirs: DirectionSet, p: float = 2.0, **kw) -> float:
    """Polygonal length sum_i sw_p(mu_{t_i}, mu_{t_{i+1}}); a lower bound of
    the true curve length, nondecreasing under refinement."""
    return sum(
        sw_p(c.measures[i], c.measures[i + 1], p, dirs, **kw) for i in range(len(c.measures) - 1)
    )


def metric_derivative_fd(c: CurveDiscretization, index: int, dirs: DirectionSet, p: float = 2.0, **kw) -> float:
    """Central-difference metric derivative at an interior node."""
    if not (0 < index < len(c.measures) - 1):
        raise ValueError("metric derivative needs an interior node")
    span = c.times[index + 1] - c.times[index - 1]
    return sw_p(c.measures[index - 1], c.measures[index + 1], p, dirs, **kw) / span


# ---------------------------------------------------------------------------
# midpoint certificate
# ---------------------------------------------------------------------------


def _simplex_grid(m: int, res: int) -> np.ndarray:
    """All nonnegative integer compositions of `res` into m parts, scaled."""
    if m == 1:
        return np.ones((1, 1))
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + [remaining])
            return
        for v in range(remaining + 1):
            rec(prefix + [v], remaining - v, slots - 1)

    rec([], res, m)
    return np.asarray(out, dtype=np.float64) / res


def midpoint_gap(
    mu0: DiscreteMeasure,
    mu1: DiscreteMeasure,
    candidates,
    dirs: DirectionSet,
    *,
    scan_resolution: int = 12,
    polish_starts: int = 8,
    return_weights: bool = False,
):
    """Best sliced mismatch between any candidate-supported measure and the
    per-direction geodesic midpoints of (mu0, mu1).

    Minimizes sum_k w_k W_2^2(nu^theta_k, mid_k) over convex weights on the
    candidate sites, where mid_k is the displacement midpoint of the
    projected pair.  The objective is convex in the weights, so a coarse
    simplex scan followed by SLSQP polishing finds the optimum; a strictly
    positive value certifies that no measure on the candidate set is an
    SW midpoint.
    """
    sites = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    if sites.size == 0:
        raise ValueError("candidate grid must be nonempty")
    if sites.shape[1] != mu0.dim:
        raise ValueError("candidate dimension mismatch")
    m = sites.shape[0]

    mids = []
    proj_sites = []
    for k in range(dirs.n_dirs):
        th = dirs.vectors[k]
        mids.append(displacement_1d(project_discrete(mu0, th), project_discrete(mu1, th), 0.5))
        proj_sites.append(sites @ th)

    def objective(lam: np.ndarray) -> float:
        lam = np.clip(lam, 0.0, None)
        lam = lam / lam.sum()
        total = 0.0
        for k in range(dirs.n_dirs):
            nu_k = Slice1D.from_atoms(proj_sites[k], lam)
            total += dirs.weights[k] * w_p_1d(nu_k, mids[k], 2.0) ** 2
        return total

    coarse = _simplex_grid(m, scan_resolution) if m <= 8 else _simplex_grid(m, 3)
    scores = np.asarray([objective(lam) for lam in coarse])
    order = np.argsort(scores)[: max(1, int(polish_starts))]

    best_val = float(scores[order[0]])
    best_lam = coarse[order[0]]
    cons = ({"type": "eq", "fun": lambda lam: lam.sum() - 1.0},)
    bounds = [(0.0, 1.0)] * m
    for idx in order:
        res = minimize(
            objective,
            coarse[idx],
            method="SLSQP",
            bounds=bounds,
            constraints=cons,
            options={"maxiter": 200, "ftol": 1e-12},
        )
        if res.fun < best_val:
            best_val = float(res.fun)
            best_lam = np.clip(res.x, 0.0, None)
            best_lam = best_lam / best_lam.sum()
    if return_weights:
        return best_val, best_lam
    return best_val
