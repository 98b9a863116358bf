"""Discrete and gridded probability measures.

Construction, validation, sampling and elementary geometry (moments,
bottleneck distance) for the two measure representations used across the
package: weighted atom clouds and cell-centered grid densities.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial.distance import cdist, pdist

MASS_TOL_DISCRETE = 1e-12
MASS_TOL_GRID = 1e-9


def _as_f64(a, name: str) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class RandomSeed:
    """64-bit unsigned seed; identical seeds reproduce streams bit-exactly."""

    seed: int

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")


SeedLike = Union[int, RandomSeed]


def stream(seed: SeedLike, *key: int) -> np.random.Generator:
    """Generator for (seed, key...).

    Distinct keys (trial index, purpose tag, ...) give statistically
    independent streams, and the stream depends only on the key — never on
    scheduling — so threaded experiments stay reproducible.
    """
    base = seed.seed if isinstance(seed, RandomSeed) else int(seed)
    if not (0 <= base < 2**64):
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    ss = np.random.SeedSequence(entropy=base, spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


# ---------------------------------------------------------------------------
# atom clouds
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted atoms sum(w_i delta_{x_i}); weights strictly positive, mass 1.

    Instances are immutable (arrays are locked) and safe to share across
    threads. Coincident atoms are allowed; see :func:`canonicalize`.
    """

    points: np.ndarray  # (n, d)
    weights: np.ndarray  # (n,)

    def __post_init__(self):
        pts = _as_f64(self.points, "points")
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty (n, d) array")
        w = _as_f64(self.weights, "weights")
        if w.shape != (pts.shape[0],):
            raise ValueError("weights must be one scalar per atom")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > MASS_TOL_DISCRETE:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "weights", _freeze(w))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.points.shape[0]


def from_points(points, weights=None) -> DiscreteMeasure:
    """Build a DiscreteMeasure, defaulting to uniform weights.

    Explicit weights are validated (finite, nonnegative, positive total)
    and normalized to total mass one.
    """
    pts = _as_f64(points, "points")
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a nonempty (n, d) array")
    n = pts.shape[0]
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = _as_f64(weights, "weights")
        if w.shape != (n,):
            raise ValueError("weights must be one scalar per atom")
        if np.any(w < 0):
            raise ValueError("negative weight")
        total = w.sum()
        if total <= 0:
            raise ValueError("weights must have positive total")
        w = w / total
    return DiscreteMeasure(pts, w)


def canonicalize(mu: DiscreteMeasure) -> DiscreteMeasure:
    """Merge exactly coincident atoms (distance 0 only) and sort atoms
    lexicographically.  Merging at any positive radius is deliberately not
    offered: whether nearby atoms are "the same" is the caller's call.
    """
    uniq, inverse = np.unique(mu.points, axis=0, return_inverse=True)
    w = np.zeros(uniq.shape[0])
    np.add.at(w, inverse, mu.weights)
    return DiscreteMeasure(uniq, w / w.sum())


def min_gap(mu: DiscreteMeasure) -> float:
    """Minimum pairwise atom distance (0 if atoms coincide)."""
    if mu.n_atoms < 2:
        raise ValueError("min_gap needs at least two atoms")
    return float(pdist(mu.points).min())


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class GridField:
    """Real values at the cell centers of a uniform axis-aligned grid.

    ``box`` is a (d, 2) array of [lo, hi] per axis and ``values`` has one
    entry per cell in row-major order.  No sign or mass constraint: this is
    the container for potentials, differences of densities, reconstructed
    fields, etc.  All integrals downstream use midpoint quadrature.
    """

    box: np.ndarray  # (d, 2)
    values: np.ndarray  # shape (n_1, ..., n_d)

    def __post_init__(self):
        box = _as_f64(self.box, "box")
        if box.ndim != 2 or box.shape[1] != 2:
            raise ValueError("box must be a (d, 2) array of [lo, hi] bounds")
        if np.any(box[:, 1] <= box[:, 0]):
            raise ValueError("box must have hi > lo on every axis")
        vals = _as_f64(self.values, "values")
        if vals.ndim != box.shape[0]:
            raise ValueError("values rank must match box dimension")
        if any(n < 2 for n in vals.shape):
            raise ValueError("grid needs at least 2 cells per axis")
        object.__setattr__(self, "box", _freeze(box))
        object.__setattr__(self, "values", _freeze(np.ascontiguousarray(vals)))

    @property
    def dim(self) -> int:
        return self.box.shape[0]

    @property
    def shape(self):
        return self.values.shape

    @property
    def spacing(self) -> np.ndarray:
        return (self.box[:, 1] - self.box[:, 0]) / np.asarray(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_centers(self, j: int) -> np.ndarray:
        lo, hi = self.box[j]
        n = self.shape[j]
        h = (hi - lo) / n
        return lo + h * (np.arange(n) + 0.5)

    def centers(self) -> np.ndarray:
        """Cell centers as an (n_cells, d) array, row-major cell order."""
        axes = [self.axis_centers(j) for j in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_volume)


@dataclasses.dataclass(frozen=True)
class GridDensity(GridField):
    """A GridField that is a probability density: values >= 0, mass 1."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.values < 0):
            raise ValueError("density values must be nonnegative")
        mass = self.integral()
        if abs(mass - 1.0) > MASS_TOL_GRID:
            raise ValueError(f"density mass is {mass!r}, not 1 within {MASS_TOL_GRID}")


def normalize_to_density(box, values) -> GridDensity:
    """Clip negatives at 0 (must be tiny) and rescale to unit mass."""
    vals = _as_f64(values, "values")
    if np.any(vals < -1e-9 * max(1.0, float(np.abs(vals).max()))):
        raise ValueError("values are significantly negative; not a density")
    vals = np.clip(vals, 0.0, None)
    field = GridField(np.asarray(box, dtype=np.float64), vals)
    mass = field.integral()
    if mass <= 0:
        raise ValueError("cannot normalize an identically zero field")
    return GridDensity(field.box, vals / mass)


# ---------------------------------------------------------------------------
# moments and sampling
# ---------------------------------------------------------------------------


def second_moment(m: Union[DiscreteMeasure, GridDensity]) -> float:
    """integral of |x|^2 dm: exact sum for atoms, midpoint quadrature on grids."""
    if isinstance(m, DiscreteMeasure):
        return float(np.dot(m.weights, np.einsum("ij,ij->i", m.points, m.points)))
    if isinstance(m, GridField):
        sq = np.einsum("ij,ij->i", m.centers(), m.centers())
        return float(np.dot(m.values.ravel(), sq) * m.cell_volume)
    raise TypeError(f"unsupported measure type {type(m)!r}")


def sample_empirical(
    source: Union[DiscreteMeasure, GridDensity, Callable],
    n: int,
    seed: SeedLike,
    *,
    key: Sequence[int] = (),
) -> DiscreteMeasure:
    """n i.i.d. samples as a uniform-weight atom cloud.

    Parameters
    ----------
    source : DiscreteMeasure, GridDensity or callable
        Atom clouds are resampled by weight; grid densities sample a cell
        (inverse CDF over cell masses) then a uniform point inside it; a
        callable is invoked as ``source(rng, n)`` and must return (n, d)
        points.
    n : number of samples (>= 1).
    seed, key : stream identity; same (seed, key) gives bit-identical output.
    """
    if n < 1:
        raise ValueError("need n >= 1 samples")
    rng = stream(seed, *key)
    if isinstance(source, DiscreteMeasure):
        idx = rng.choice(source.n_atoms, size=n, p=source.weights)
        pts = source.points[idx]
    elif isinstance(source, GridDensity):
        probs = source.values.ravel() * source.cell_volume
        probs = probs / probs.sum()
        flat = rng.choice(probs.size, size=n, p=probs)
        cell_idx = np.stack(np.unravel_index(flat, source.shape), axis=1)
        lo = source.box[:, 0] + cell_idx * source.spacing
        pts = lo + rng.uniform(size=(n, source.dim)) * source.spacing
    elif callable(source):
        pts = np.asarray(source(rng, n), dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] != n:
            raise ValueError("sampler must return an (n, d) array")
    else:
        raise TypeError(f"unsupported sample source {type(source)!r}")
    return DiscreteMeasure(pts, np.full(n, 1.0 / n))


# ---------------------------------------------------------------------------
# bottleneck distance
# ---------------------------------------------------------------------------


def _perfect_matching_exists(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    match = maximum_bipartite_matching(csr_matrix(adj), perm_type="column")
    return int((match >= 0).sum()) == n


def winfty_discrete(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Bottleneck (infinity-Wasserstein) distance between two uniform clouds
    of equal size.

    The optimum over couplings is attained at a bijection, so we binary
    search the sorted distinct pairwise distances for the smallest threshold
    whose adjacency graph admits a perfect matching.  Exact up to float
    comparison of the distances themselves.
    """
    if mu.dim != nu.dim:
        raise ValueError("dimension mismatch")
    n = mu.n_atoms
    if nu.n_atoms != n:
        raise ValueError("winfty_discrete requires equal atom counts")
    uniform = np.full(n, 1.0 / n)
    if (
        np.abs(mu.weights - uniform).max() > MASS_TOL_DISCRETE
        or np.abs(nu.weights - uniform).max() > MASS_TOL_DISCRETE
    ):
        raise ValueError("winfty_discrete requires uniform weights")
    dist = cdist(mu.points, nu.points)
    levels = np.unique(dist)
    lo, hi = 0, levels.size - 1
    if _perfect_matching_exists(dist <= levels[lo]):
        return float(levels[lo])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _perfect_matching_exists(dist <= levels[mid]):
            hi = mid
        else:
            lo = mid
    return float(levels[hi])


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

_FMT = "%.17g"


def save_measure_csv(mu: DiscreteMeasure, path) -> None:
    """Write `dim,n` then one `x1,...,xd,weight` row per atom."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{mu.dim},{mu.n_atoms}\n")
        for x, w in zip(mu.points, mu.weights):
            row = [_FMT % c for c in x] + [_FMT % w]
            fh.write(",".join(row) + "\n")


def load_measure_csv(path) -> DiscreteMeasure:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty measure file")
    head = lines[0].split(",")
    if len(head) != 2:
        raise ValueError(f"{path}: header must be 'dim,n'")
    try:
        dim, n = int(head[0]), int(head[1])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed header {lines[0]!r}") from exc
    if len(lines) - 1 != n:
        raise ValueError(f"{path}: header promises {n} atoms, found {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != dim + 1:
            raise ValueError(f"{path}: row {ln!r} needs {dim + 1} fields")
        rows.append([float(p) for p in parts])
    arr = np.asarray(rows)
    return from_points(arr[:, :dim], arr[:, dim])


def save_grid(field: GridField, path) -> None:
    """Write `box lo... hi...`, `shape n1 ... nd`, then row-major values."""
    with open(path, "w", encoding="ascii") as fh:
        los = " ".join(_FMT % v for v in field.box[:, 0])
        his = " ".join(_FMT % v for v in field.box[:, 1])
        fh.write(f"box {los} {his}\n")
        fh.write("shape " + " ".join(str(s) for s in field.shape) + "\n")
        for v in field.values.ravel():
            fh.write(_FMT % v + "\n")


def load_grid(path, kind: str = "density") -> GridField:
    """Read the grid format; kind='density' validates a GridDensity,
    kind='field' skips the mass/positivity invariants."""
    with open(path, "r", encoding="ascii") as fh:
        tokens_by_line = [ln.split() for ln in fh if ln.strip()]
    if len(tokens_by_line) < 2 or tokens_by_line[0][0] != "box" or tokens_by_line[1][0] != "shape":
        raise ValueError(f"{path}: expected 'box ...' then 'shape ...' header lines")
    nums = [float(t) for t in tokens_by_line[0][1:]]
    if len(nums) % 2 != 0 or not nums:
        raise ValueError(f"{path}: box line needs lo and hi per axis")
    d = len(nums) // 2
    box = np.stack([np.asarray(nums[:d]), np.asarray(nums[d:])], axis=1)
    shape = tuple(int(t) for t in tokens_by_line[1][1:])
    if len(shape) != d:
        raise ValueError(f"{path}: shape rank {len(shape)} != box dimension {d}")
    flat = [float(t) for row in tokens_by_line[2:] for t in row]
    expected = int(np.prod(shape))
    if len(flat) != expected:
        raise ValueError(f"{path}: expected {expected} values, found {len(flat)}")
    values = np.asarray(flat).reshape(shape)
    if kind == "density":
        return GridDensity(box, values)
    if kind == "field":
        return GridField(box, values)
    raise ValueError(f"unknown grid kind {kind!r}")


# ---------------------------------------------------------------------------
# stock densities
# ---------------------------------------------------------------------------


def uniform_box_density(box, shape) -> GridDensity:
    """Uniform probability density on a box."""
    box = _as_f64(box, "box")
    vol = float(np.prod(box[:, 1] - box[:, 0]))
    values = np.full(shape, 1.0 / vol)
    return GridDensity(box, values)


def gaussian_density(box, shape, center, sigma) -> GridDensity:
    """Isotropic Gaussian sampled at cell centers, renormalized on the grid."""
    field = GridField(_as_f64(box, "box"), np.zeros(shape))
    pts = field.centers()
    sq = ((pts - np.asarray(center, dtype=np.float64)) ** 2).sum(axis=1)
    vals = np.exp(-sq / (2.0 * float(sigma) ** 2)).reshape(shape)
    return normalize_to_density(box, vals)


def disk_density(box, shape, center, radius) -> GridDensity:
    """Uniform density on a disk (indicator at cell centers, renormalized)."""
    field = GridField(_as_f64(box, "box"), np.zeros(shape))
    pts = field.centers()
    sq = ((pts - np.asarray(center, dtype=np.float64)) ** 2).sum(axis=1)
    vals = (sq <= float(radius) ** 2).astype(np.float64).reshape(shape)
    return normalize_to_density(box, vals)
