"""Radon transform machinery on the half-sphere slice domain.

Sliced objects live on the quotient of S^{d-1} x R by (theta, r) ~
(-theta, -r).  Directions are stored on one canonical hemisphere, which
makes the evenness identification structural: there is nothing to check at
runtime, and full-sphere averages of even integrands equal the stored
half-sphere weighted averages.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import gamma

from ._parallel import pmap
from .measures import DiscreteMeasure, GridDensity, GridField, SeedLike, stream
from .ot1d import Slice1D

DECAY_TOL = 1e-6  # spectral ops require slice boundary values below this * max
IMAG_TOL = 1e-9


def inversion_constant(d: int) -> float:
    """c_d = (4 pi)^{(d-1)/2} Gamma(d/2) / Gamma(1/2); c_2 = 2, c_3 = 2 pi."""
    return float((4.0 * math.pi) ** ((d - 1) / 2.0) * gamma(d / 2.0) / gamma(0.5))


# ---------------------------------------------------------------------------
# directions
# ---------------------------------------------------------------------------


def _canonical_hemisphere(vectors: np.ndarray) -> np.ndarray:
    """Flip each direction so its last coordinate of significant size is
    positive; antipodal representatives then coincide."""
    out = vectors.copy()
    for row in out:
        for c in row[::-1]:
            if abs(c) > 1e-12:
                if c < 0:
                    row *= -1.0
                break
    return out


@dataclasses.dataclass(frozen=True)
class DirectionSet:
    """Unit directions on a canonical hemisphere with quadrature weights.

    Weights sum to 1 and represent the *normalized* sphere average of even
    integrands (each stored direction stands for the antipodal pair).
    """

    vectors: np.ndarray  # (N, d)
    weights: np.ndarray  # (N,)
    scheme: str

    def __post_init__(self):
        vec = np.ascontiguousarray(self.vectors, dtype=np.float64)
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if vec.ndim != 2 or vec.shape[0] == 0:
            raise ValueError("directions must form a nonempty (N, d) array")
        norms = np.sqrt((vec**2).sum(axis=1))
        if np.abs(norms - 1.0).max() > 1e-12:
            raise ValueError("directions must be unit vectors within 1e-12")
        if w.shape != (vec.shape[0],) or np.any(w <= 0):
            raise ValueError("weights must be positive, one per direction")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("direction weights must sum to 1")
        vec.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def n_dirs(self) -> int:
        return self.vectors.shape[0]


def _fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


def make_directions(d: int, N: int, scheme: str = "auto", seed: Optional[SeedLike] = None) -> DirectionSet:
    """Direction quadrature for the normalized sphere average.

    d=2 'equiangular': theta_k = (cos(k pi / N), sin(k pi / N)), weight 1/N;
    the second-moment identity sum_k w_k (v . theta_k)^2 = |v|^2 / 2 holds
    exactly.  d=3 'fibonacci': spiral nodes folded onto the hemisphere,
    equal weights.  'monte-carlo': seeded uniform directions, any d in
    {2, 3}.
    """
    if d not in (2, 3):
        raise ValueError(f"unsupported dimension {d}")
    if N < 2:
        raise ValueError("need at least 2 directions")
    if scheme == "auto":
        scheme = "equiangular" if d == 2 else "fibonacci"
    if scheme == "equiangular":
        if d != 2:
            raise ValueError("equiangular directions are 2D only")
        ang = np.arange(N) * math.pi / N
        vec = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    elif scheme == "fibonacci":
        if d != 3:
            raise ValueError("fibonacci directions are 3D only")
        vec = _canonical_hemisphere(_fibonacci_sphere(N))
    elif scheme == "monte-carlo":
        if seed is None:
            raise ValueError("monte-carlo directions need a seed")
        rng = stream(seed, 0xD1)
        raw = rng.standard_normal((N, d))
        vec = _canonical_hemisphere(raw / np.linalg.norm(raw, axis=1, keepdims=True))
    else:
        raise ValueError(f"unknown direction scheme {scheme!r}")
    norms = np.linalg.norm(vec, axis=1, keepdims=True)
    vec = vec / norms
    return DirectionSet(vec, np.full(N, 1.0 / N), scheme)


# ---------------------------------------------------------------------------
# sliced containers
# ---------------------------------------------------------------------------


def make_r_grid(L_r: float, N_r: int) -> np.ndarray:
    """Uniform grid on [-L_r, L_r) with N_r points (periodic convention: the
    sample at +L_r is identified with -L_r; fields must decay there)."""
    if N_r < 8:
        raise ValueError("need N_r >= 8")
    return np.linspace(-float(L_r), float(L_r), int(N_r), endpoint=False)


@dataclasses.dataclass(frozen=True)
class SlicedField:
    """Values g(theta_k, r_j) on directions x uniform r grid."""

    directions: DirectionSet
    r_grid: np.ndarray  # (N_r,)
    values: np.ndarray  # (N_theta, N_r)

    def __post_init__(self):
        r = np.ascontiguousarray(self.r_grid, dtype=np.float64)
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if r.ndim != 1 or r.size < 8:
            raise ValueError("r grid needs at least 8 points")
        steps = np.diff(r)
        if np.abs(steps - steps[0]).max() > 1e-9 * abs(steps[0]):
            raise ValueError("r grid must be uniform")
        if v.shape != (self.directions.n_dirs, r.size):
            raise ValueError("values must have shape (N_theta, N_r)")
        r.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "values", v)

    @property
    def dr(self) -> float:
        return float(self.r_grid[1] - self.r_grid[0])

    def slice_masses(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.dr

    def with_values(self, values: np.ndarray) -> "SlicedField":
        return SlicedField(self.directions, self.r_grid, values)


@dataclasses.dataclass(frozen=True)
class SliceMeasureFamily:
    """One probability slice per direction."""

    directions: DirectionSet
    slices: tuple

    def __post_init__(self):
        slices = tuple(self.slices)
        if len(slices) != self.directions.n_dirs:
            raise ValueError("need exactly one slice per direction")
        for s in slices:
            if not isinstance(s, Slice1D):
                raise TypeError("slices must be Slice1D instances")
        object.__setattr__(self, "slices", slices)


def slices_from_field(g: SlicedField) -> SliceMeasureFamily:
    """Reinterpret a nonnegative SlicedField row as a grid probability slice
    (samples become cell centers; each slice renormalized to mass one)."""
    half = 0.5 * g.dr
    lo, hi = g.r_grid[0] - half, g.r_grid[-1] + half
    out = []
    for row in g.values:
        if np.any(row < -1e-12 * max(1.0, float(np.abs(row).max()))):
            raise ValueError("slice has significantly negative values")
        out.append(Slice1D.from_grid(lo, hi, np.clip(row, 0.0, None)))
    return SliceMeasureFamily(g.directions, tuple(out))


# ---------------------------------------------------------------------------
# forward transforms
# ---------------------------------------------------------------------------


def project_discrete(mu: DiscreteMeasure, theta) -> Slice1D:
    """Pushforward of an atom cloud under x -> x . theta (exact; coincident
    projections merge)."""
    th = np.asarray(theta, dtype=np.float64).ravel()
    if th.shape != (mu.dim,):
        raise ValueError("direction dimension mismatch")
    t = mu.points @ th
    order = np.argsort(t, kind="stable")
    t, w = t[order], mu.weights[order]
    uniq, inverse = np.unique(t, return_inverse=True)
    if uniq.size != t.size:
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, w)
        return Slice1D.from_atoms(uniq, merged)
    return Slice1D("atoms", positions=t, weights=w / w.sum())


def _support_radius(field: GridField) -> float:
    corners = np.stack(np.meshgrid(*[field.box[j] for j in range(field.dim)], indexing="ij"), axis=-1)
    return float(np.sqrt((corners.reshape(-1, field.dim) ** 2).sum(axis=1)).max())


def default_r_grid(field: GridField, N_r: int = 512) -> np.ndarray:
    """[-L, L) with L = 1.5 x support radius and a power-of-two point count."""
    return make_r_grid(1.5 * _support_radius(field), N_r)


def _sample_bilinear(field: GridField, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Bilinear interpolation on the cell-center lattice, clamped between the
    outermost centers and the box edge, zero outside the box."""
    (lox, hix), (loy, hiy) = field.box
    hx, hy = field.spacing
    nx, ny = field.shape
    u = np.clip((X - lox) / hx - 0.5, 0.0, nx - 1.0)
    v = np.clip((Y - loy) / hy - 0.5, 0.0, ny - 1.0)
    i0 = np.minimum(u.astype(np.int64), nx - 2)
    j0 = np.minimum(v.astype(np.int64), ny - 2)
    fu = u - i0
    fv = v - j0
    vals = field.values
    out = (
        vals[i0, j0] * (1 - fu) * (1 - fv)
        + vals[i0 + 1, j0] * fu * (1 - fv)
        + vals[i0, j0 + 1] * (1 - fu) * fv
        + vals[i0 + 1, j0 + 1] * fu * fv
    )
    inside = (X >= lox) & (X <= hix) & (Y >= loy) & (Y <= hiy)
    return out * inside


def radon_grid(
    f: GridField,
    dirs: DirectionSet,
    r_grid: Optional[np.ndarray] = None,
    *,
    threads: int = 1,
) -> SlicedField:
    """Line-integral transform of a 2D grid field.

    Each slice samples f along x . theta = r at steps equal to the grid
    spacing (bilinear interpolation) and sums with the trapezoid rule.  For
    smooth decaying inputs every slice integrates to the field's total
    integral within 1e-6; discontinuous densities (indicators) are accurate
    to O(grid spacing) near their edges instead.
    """
    if f.dim != 2:
        raise ValueError("grid Radon transform is 2D only")
    if dirs.dim != 2:
        raise ValueError("direction dimension mismatch")
    r = default_r_grid(f) if r_grid is None else np.asarray(r_grid, dtype=np.float64)
    h = float(f.spacing.min())
    S = _support_radius(f) + 2.0 * h
    n_s = int(math.ceil(2.0 * S / h)) + 1
    s = np.linspace(-S, S, n_s)

    def one_dir(k: int) -> np.ndarray:
        th = dirs.vectors[k]
        perp = np.array([-th[1], th[0]])
        X = r[:, None] * th[0] + s[None, :] * perp[0]
        Y = r[:, None] * th[1] + s[None, :] * perp[1]
        samples = _sample_bilinear(f, X, Y)
        return np.trapezoid(samples, dx=s[1] - s[0], axis=1)

    rows = pmap(one_dir, range(dirs.n_dirs), threads)
    return SlicedField(dirs, r, np.stack(rows, axis=0))


def project_grid_exact(
    f: GridField,
    dirs: DirectionSet,
    r_grid: Optional[np.ndarray] = None,
    *,
    threads: int = 1,
) -> SlicedField:
    """Exact pushforward of a 2D grid density under x -> x . theta.

    Each cell's mass projects to the convolution of two uniform laws with
    half-widths h_i |theta_i| / 2, centered at the projected cell center;
    the piecewise-quadratic CDF is accumulated over r-cells by exact
    differences.  Unlike the line-integral sampler this never misses
    support — every r-cell overlapping the projected support receives
    positive mass — and slice masses equal the field's integral to roundoff.
    Intended for probability densities feeding 1D statistics; `radon_grid`
    remains the quadrature realization of the integral transform itself.
    """
    if f.dim != 2:
        raise ValueError("exact grid projection is 2D only")
    if dirs.dim != 2:
        raise ValueError("direction dimension mismatch")
    r = default_r_grid(f) if r_grid is None else np.asarray(r_grid, dtype=np.float64)
    dr = float(r[1] - r[0])
    edges = np.concatenate([r - 0.5 * dr, [r[-1] + 0.5 * dr]])
    centers = f.centers()
    masses = f.values.ravel() * f.cell_volume
    hx, hy = (float(sp) for sp in f.spacing)
    n_r = r.size

    def one_dir(k: int) -> np.ndarray:
        th = dirs.vectors[k]
        t = centers @ th
        a = 0.5 * hx * abs(float(th[0]))
        b = 0.5 * hy * abs(float(th[1]))
        lo, hi = min(a, b), max(a, b)
        A = a + b
        if t.min() - A < edges[0] or t.max() + A > edges[-1]:
            raise ValueError("r grid does not cover the projected support")

        def cdf(u: np.ndarray) -> np.ndarray:
            if lo <= 1e-14 * hi:  # axis-aligned: plain uniform of half-width hi
                return np.clip((u + hi) / (2.0 * hi), 0.0, 1.0)
            B = hi - lo
            u_c = np.clip(u, -A, A)
            left = (u_c + A) ** 2 / (8.0 * lo * hi)
            mid = (lo + u_c + B) / (2.0 * hi)
            right = 1.0 - (A - u_c) ** 2 / (8.0 * lo * hi)
            return np.where(u_c <= -B, left, np.where(u_c < B, mid, right))

        span = int(math.ceil(2.0 * A / dr)) + 2
        j0 = np.searchsorted(edges, t - A, side="right") - 1
        cols = np.clip(j0[:, None] + np.arange(span + 1)[None, :], 0, n_r)
        g_vals = cdf(edges[cols] - t[:, None])
        d_g = np.diff(g_vals, axis=1)
        bins = np.minimum(cols[:, :-1], n_r - 1)  # clipped duplicates carry zero mass
        acc = np.zeros(n_r)
        np.add.at(acc, bins.ravel(), (masses[:, None] * d_g).ravel())
        return acc / dr

    rows = pmap(one_dir, range(dirs.n_dirs), threads)
    return SlicedField(dirs, r, np.stack(rows, axis=0))


def dual_radon(
    g: SlicedField,
    box,
    shape,
    *,
    coeffs: Optional[np.ndarray] = None,
    threads: int = 1,
) -> GridField:
    """(R* g)(x) = sum_k w_k c_k g(theta_k, x . theta_k) on a target grid.

    Linear interpolation in r, zero outside the r range.  `coeffs` are
    optional per-direction factors (used e.g. for vector-valued duals);
    default 1.  The reduction over k is a fixed-order sequential sum, so the
    result is bit-identical for any thread count.
    """
    target = GridField(np.asarray(box, dtype=np.float64), np.zeros(shape))
    pts = target.centers()
    c = np.ones(g.directions.n_dirs) if coeffs is None else np.asarray(coeffs, dtype=np.float64)

    def one_dir(k: int) -> np.ndarray:
        t = pts @ g.directions.vectors[k]
        return np.interp(t, g.r_grid, g.values[k], left=0.0, right=0.0)

    rows = pmap(one_dir, range(g.directions.n_dirs), threads)
    acc = np.zeros(pts.shape[0])
    for k, row in enumerate(rows):
        acc += g.directions.weights[k] * c[k] * row
    return GridField(target.box, acc.reshape(shape))


# ---------------------------------------------------------------------------
# spectral multipliers
# ---------------------------------------------------------------------------


def slice_multiplier(g: SlicedField, a: float, b: int = 0, *, pad_factor: int = 2) -> SlicedField:
    """Apply the Fourier multiplier |zeta|^a (i zeta)^b slice by slice.

    a >= 0 real, b in {0, 1}.  Slices are zero padded by `pad_factor` before
    the DFT; inputs must decay at the r-grid ends (boundary magnitude below
    1e-6 of the slice max), otherwise periodization would corrupt the
    nonlocal multiplier and a ValueError names the offending slice.
    """
    a = float(a)
    if a < 0:
        raise ValueError("need a >= 0")
    if b not in (0, 1):
        raise ValueError("b must be 0 or 1")
    v = g.values
    slice_max = np.abs(v).max(axis=1)
    boundary = np.maximum(np.abs(v[:, 0]), np.abs(v[:, -1]))
    bad = boundary > DECAY_TOL * slice_max
    if np.any(bad):
        k = int(np.nonzero(bad)[0][0])
        raise ValueError(
            f"slice {k} does not decay at the r-grid ends "
            f"(boundary {boundary[k]:.3e} vs max {slice_max[k]:.3e})"
        )
    n = v.shape[1]
    n_pad = int(pad_factor) * n
    zeta = 2.0 * math.pi * np.fft.fftfreq(n_pad, d=g.dr)
    symbol = np.abs(zeta) ** a
    if b == 1:
        symbol = symbol * (1j * zeta)
        if n_pad % 2 == 0:
            # the unpaired Nyquist bin cannot carry an odd symbol; keeping it
            # injects a spurious alternating imaginary component
            symbol[n_pad // 2] = 0.0
    spec = np.fft.fft(v, n=n_pad, axis=1) * symbol[None, :]
    out = np.fft.ifft(spec, axis=1)[:, :n]
    resid = np.abs(out.imag).max()
    scale = max(1.0, float(np.abs(out.real).max()))
    if resid > IMAG_TOL * scale:
        raise ValueError(f"imaginary residue {resid:.3e} exceeds tolerance")
    return g.with_values(np.ascontiguousarray(out.real))


def lambda_d(g: SlicedField) -> SlicedField:
    """The |zeta|^{d-1} multiplier from the inversion formula."""
    return slice_multiplier(g, a=g.directions.dim - 1, b=0)


def invert_radon(g: SlicedField, box, shape, *, threads: int = 1) -> GridField:
    """c_d^{-1} R* Lambda_d g (exact inversion in the continuum)."""
    c_d = inversion_constant(g.directions.dim)
    return dual_radon(
        lambda_d(g),
        box,
        shape,
        coeffs=np.full(g.directions.n_dirs, 1.0 / c_d),
        threads=threads,
    )


# ---------------------------------------------------------------------------
# Fourier slice check
# ---------------------------------------------------------------------------


def fourier_slice_gap(
    f: GridField,
    dirs: DirectionSet,
    r_grid: Optional[np.ndarray] = None,
    *,
    n_freqs: int = 33,
    max_dirs: int = 16,
) -> float:
    """max over sampled (theta, zeta) of
    |(2 pi)^{(d-1)/2} F_d f(theta zeta) - F_1 R_theta f(zeta)|.

    The full-dimension transform is evaluated by direct quadrature at the
    off-grid frequencies theta * zeta; the slice transform comes from the
    r-grid samples of R_theta f.  Directions are subsampled to at most
    `max_dirs` and zeta runs over the lowest `n_freqs` nonnegative DFT
    frequencies of the r grid.
    """
    if f.dim != 2:
        raise ValueError("fourier_slice_gap is 2D only")
    g = radon_grid(f, dirs, r_grid)
    r = g.r_grid
    n = r.size
    zeta = 2.0 * math.pi * np.fft.fftfreq(n, d=g.dr)[: min(int(n_freqs), n // 2)]
    step = max(1, dirs.n_dirs // int(max_dirs))
    pts = f.centers()
    vals = f.values.ravel() * f.cell_volume
    gap = 0.0
    for k in range(0, dirs.n_dirs, step):
        th = dirs.vectors[k]
        t = pts @ th
        # lhs: (2 pi)^{1/2} F_2 f(theta zeta) with F_2 = (2 pi)^{-1} int f e^{-i x.xi}
        lhs = np.exp(-1j * np.outer(zeta, t)) @ vals / math.sqrt(2.0 * math.pi)
        rhs = (np.exp(-1j * np.outer(zeta, r)) @ g.values[k]) * g.dr / math.sqrt(2.0 * math.pi)
        gap = max(gap, float(np.abs(lhs - rhs).max()))
    return gap


# ---------------------------------------------------------------------------
# smoothing
# ---------------------------------------------------------------------------


def smooth_project(
    mu: DiscreteMeasure,
    dirs: DirectionSet,
    r_grid: np.ndarray,
    bandwidth: float,
) -> SliceMeasureFamily:
    """Project atoms and convolve each slice with a Gaussian of width
    `bandwidth`, renormalized on the r grid.  Gives every slice a density,
    which the weighted-H^{-1} machinery requires."""
    h = float(bandwidth)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    r = np.asarray(r_grid, dtype=np.float64)
    dr = r[1] - r[0]
    half = 0.5 * dr
    out = []
    for k in range(dirs.n_dirs):
        t = mu.points @ dirs.vectors[k]
        dens = np.exp(-((r[:, None] - t[None, :]) ** 2) / (2.0 * h * h)) @ mu.weights
        out.append(Slice1D.from_grid(r[0] - half, r[-1] + half, dens))
    return SliceMeasureFamily(dirs, tuple(out))


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

_FMT = "%.17g"


def save_sliced_csv(g: SlicedField, path) -> None:
    """Header `N_theta,N_r,L_r`, then `theta_index,r_index,value` rows."""
    L_r = -float(g.r_grid[0])
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{g.directions.n_dirs},{g.r_grid.size},{_FMT % L_r}\n")
        for k in range(g.directions.n_dirs):
            for j in range(g.r_grid.size):
                fh.write(f"{k},{j},{_FMT % g.values[k, j]}\n")


def load_sliced_csv(path, directions: Optional[DirectionSet] = None):
    """Read the CSV export; returns a SlicedField when a DirectionSet with a
    matching count is supplied, else the raw (values, L_r) pair."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    head = lines[0].split(",")
    if len(head) != 3:
        raise ValueError(f"{path}: header must be 'N_theta,N_r,L_r'")
    n_theta, n_r, L_r = int(head[0]), int(head[1]), float(head[2])
    values = np.zeros((n_theta, n_r))
    if len(lines) - 1 != n_theta * n_r:
        raise ValueError(f"{path}: expected {n_theta * n_r} value rows")
    for ln in lines[1:]:
        k_s, j_s, v_s = ln.split(",")
        values[int(k_s), int(j_s)] = float(v_s)
    if directions is None:
        return values, L_r
    if directions.n_dirs != n_theta:
        raise ValueError("direction count does not match file header")
    return SlicedField(directions, make_r_grid(L_r, n_r), values)
