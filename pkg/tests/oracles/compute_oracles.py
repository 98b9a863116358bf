"""Independent oracle computations for test reference values.

Every nontrivial expected value that appears frozen in the test suite is
computed here by a route that does not touch the library code: dense
quadrature, closed-form special functions, or brute-force enumeration.
Run `python tests/oracles/compute_oracles.py` to regenerate the table;
the frozen literals in the tests carry the names printed here.
"""

import itertools
import math

import numpy as np
from scipy import integrate, special, stats


def show(name, value):
    print(f"{name} = {value:.17g}")


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def winfty_two_pairs():
    # brute force over both bijections of {(0,0),(1,0)} -> {(0,0.1),(1,0.2)}
    xs = np.array([[0.0, 0.0], [1.0, 0.0]])
    ys = np.array([[0.0, 0.1], [1.0, 0.2]])
    best = math.inf
    for perm in itertools.permutations(range(2)):
        cost = max(np.linalg.norm(xs[i] - ys[perm[i]]) for i in range(2))
        best = min(best, cost)
    return best


show("winfty_two_pairs", winfty_two_pairs())
show("second_moment_unit_square", 2.0 / 3.0)  # int (x^2+y^2) dx dy over [0,1]^2


# ---------------------------------------------------------------------------
# ot1d
# ---------------------------------------------------------------------------

def w2_two_atoms_to_one():
    # W_2^2(0.5 d_0 + 0.5 d_1, d_{1/2}); only one coupling exists
    return math.sqrt(0.5 * 0.25 + 0.5 * 0.25)


show("w2_two_atoms_to_one", w2_two_atoms_to_one())
show("w1_uniform_to_center", integrate.quad(lambda x: abs(x - 0.5), 0, 1)[0])

# || F_mu - F_nu ||_{L^2} with F_mu = x, F_nu = x^2 on [0,1], sigma uniform
val, _ = integrate.quad(lambda x: (x - x * x) ** 2, 0, 1)
show("weighted_hneg1_tilted", math.sqrt(val))  # = 1/sqrt(30)


# ---------------------------------------------------------------------------
# direction quadrature
# ---------------------------------------------------------------------------

def fibonacci_sphere(n):
    # spiral nodes, canonical full-sphere construction
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


pts = fibonacci_sphere(100)
show("fibonacci100_e1_moment_error", abs(np.mean(pts[:, 0] ** 2) - 1.0 / 3.0))


# ---------------------------------------------------------------------------
# radon / spectral
# ---------------------------------------------------------------------------

def lambda2_gaussian(r):
    # |zeta| Fourier multiplier applied to exp(-r^2/2):
    # (1/sqrt(2 pi)) * Int |z| exp(-z^2/2) exp(i r z) dz, computed two ways.
    quad_val = (2.0 / math.sqrt(2.0 * math.pi)) * integrate.quad(
        lambda z: z * math.exp(-z * z / 2.0) * math.cos(r * z), 0, np.inf, limit=400
    )[0]
    # closed form via the Dawson function: Int_0^inf z e^{-z^2/2} cos(bz) dz
    #   = 1 - sqrt(2) b D(b/sqrt(2))
    closed = (2.0 / math.sqrt(2.0 * math.pi)) * (
        1.0 - math.sqrt(2.0) * r * special.dawsn(r / math.sqrt(2.0))
    )
    assert abs(quad_val - closed) < 1e-12
    return closed


for r in (0.0, 0.5, 1.0, 2.0):
    show(f"lambda2_gaussian_r{r}", lambda2_gaussian(r))

show("c2_constant", (4 * math.pi) ** 0.5 * special.gamma(1.0) / special.gamma(0.5))
show("c3_constant", (4 * math.pi) ** 1.0 * special.gamma(1.5) / special.gamma(0.5))


def riesz_kernel_selfcell():
    # Int over the square cell [-h/2,h/2]^2 of 1/|y| dy = 4 h asinh(1)
    return 4.0 * math.asinh(1.0)


show("riesz_selfcell_over_h", riesz_kernel_selfcell())


# ---------------------------------------------------------------------------
# sobolev norms of the unit-height Gaussian f(x) = exp(-|x|^2/2), d = 2
# (F_2 f(xi) = exp(-|xi|^2/2) with the (2 pi)^{-d/2} forward convention)
# ---------------------------------------------------------------------------

def gaussian_hdot(s):
    # (Int |xi|^{2s} exp(-|xi|^2) dxi)^{1/2} in d = 2 polar coordinates
    val, _ = integrate.quad(lambda rho: rho ** (2 * s) * math.exp(-rho * rho) * 2 * math.pi * rho, 0, np.inf)
    return math.sqrt(val)


show("gaussian_hdot1", gaussian_hdot(1.0))       # sqrt(pi Gamma(2)) = sqrt(pi)
show("gaussian_hdot32", gaussian_hdot(1.5))      # sqrt(pi Gamma(5/2))
assert abs(gaussian_hdot(1.0) - math.sqrt(math.pi)) < 1e-12
assert abs(gaussian_hdot(1.5) - math.sqrt(math.pi * special.gamma(2.5))) < 1e-12


def offset_gaussian_diff_hneg32(sigma=0.7, off=0.5):
    # f = G_{(-off,0)} - G_{(+off,0)}, G = unit-mass Gaussian of width sigma.
    # F_2 f(xi) = (2 pi)^{-1} e^{-sigma^2 |xi|^2 / 2} (e^{i off xi_1} - e^{-i off xi_1})
    # |F_2 f|^2 = (2 pi)^{-2} e^{-sigma^2 |xi|^2} 4 sin^2(off xi_1)
    def integrand(rho, phi):
        x1 = rho * math.cos(phi)
        amp = 4.0 * math.sin(off * x1) ** 2 * math.exp(-(sigma * rho) ** 2)
        return rho ** (-3.0) * amp / (2 * math.pi) ** 2 * rho

    val, _ = integrate.dblquad(integrand, 0, 2 * math.pi, 0, 60.0, epsabs=1e-13, epsrel=1e-12)
    return math.sqrt(val)


show("offset_gaussian_diff_hneg32", offset_gaussian_diff_hneg32())


# ---------------------------------------------------------------------------
# swdist: the two-cluster square example
# ---------------------------------------------------------------------------

def sw2_square_swap():
    # mu0 = (d_{(-1,-1)} + d_{(1,1)})/2, mu1 = (d_{(-1,1)} + d_{(1,-1)})/2
    # per-direction squared cost 2 - 2|cos 2t|, averaged over t in [0, pi)
    val, _ = integrate.quad(lambda t: 2.0 - 2.0 * abs(math.cos(2 * t)), 0, math.pi)
    return val / math.pi


show("sw2sq_square_swap_exact", 2.0 - 4.0 / math.pi)
assert abs(sw2_square_swap() - (2.0 - 4.0 / math.pi)) < 1e-10


def sw2sq_square_swap_equiangular(n):
    t = np.arange(n) * math.pi / n
    return float(np.mean(2.0 - 2.0 * np.abs(np.cos(2 * t))))


show("sw2sq_square_swap_N720", sw2sq_square_swap_equiangular(720))
show("sw2sq_square_swap_N720_gap",
     abs(sw2sq_square_swap_equiangular(720) - (2.0 - 4.0 / math.pi)))


def midpoint_gap_corners(n_dirs=720, res=200):
    # objective over corner-supported candidates nu = sum l_i d_{c_i}:
    # G(l) = mean_k W_2^2( proj_k nu, midpoint slice of proj_k mu0, proj_k mu1 )
    # scanned on a simplex grid; exact 1D W2 via sorted quantile breakpoints.
    corners = np.array([[-1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [1.0, -1.0]])
    thetas = np.arange(n_dirs) * math.pi / n_dirs
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)

    def w2sq_atoms(x, wx, y, wy):
        ix, iy = np.argsort(x), np.argsort(y)
        x, wx, y, wy = x[ix], wx[ix], y[iy], wy[iy]
        cx, cy = np.cumsum(wx), np.cumsum(wy)
        edges = np.unique(np.concatenate([[0.0], cx, cy]))
        mids = 0.5 * (edges[:-1] + edges[1:])
        qx = x[np.searchsorted(cx, mids, side="left").clip(0, len(x) - 1)]
        qy = y[np.searchsorted(cy, mids, side="left").clip(0, len(y) - 1)]
        return float(np.sum(np.diff(edges) * (qx - qy) ** 2))

    mu0 = np.array([[-1.0, -1.0], [1.0, 1.0]])
    mu1 = np.array([[-1.0, 1.0], [1.0, -1.0]])
    # midpoint slice: pair sorted projections, average positions
    targets = []
    for th in dirs:
        a = np.sort(mu0 @ th)
        b = np.sort(mu1 @ th)
        targets.append(0.5 * (a + b))
    targets = np.array(targets)  # (K,2) atoms of weight 1/2 each

    proj_c = dirs @ corners.T  # (K,4)
    best = math.inf
    # simplex scan at resolution 1/res (coarse scan then local refine)
    for i in range(res + 1):
        for j in range(res + 1 - i):
            for k in range(res + 1 - i - j):
                l = np.array([i, j, k, res - i - j - k], dtype=float) / res
                keep = l > 0
                tot = 0.0
                for kk in range(n_dirs):
                    tot += w2sq_atoms(proj_c[kk][keep], l[keep],
                                      targets[kk], np.array([0.5, 0.5]))
                best = min(best, tot / n_dirs)
        if res > 40 and i > res // 2 and best < math.inf:
            pass
    return best


# coarse scan (res=20) is enough to bracket the gap scale; refined value
# comes from the library-side optimizer which this number sanity-checks.
show("midpoint_gap_corners_res20", midpoint_gap_corners(n_dirs=180, res=20))


def two_sliding_lines_ratio(delta=0.05, t=0.05, n=1024, h=0.02, n_dirs=360):
    # top line: uniform on [-1+t, 1+t] x {delta}, moving right at speed 1
    # bottom:   uniform on [-1-t, 1-t] x {-delta}, moving left at speed 1
    s = (np.arange(n) + 0.5) / n * 2.0 - 1.0  # atom offsets in (-1, 1)

    def cloud(tt):
        top = np.stack([s + tt, np.full(n, delta)], axis=1)
        bot = np.stack([s - tt, np.full(n, -delta)], axis=1)
        return np.concatenate([top, bot])

    thetas = np.arange(n_dirs) * math.pi / n_dirs
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    a, b = cloud(t - h), cloud(t + h)
    total = 0.0
    for th in dirs:
        pa = np.sort(a @ th)
        pb = np.sort(b @ th)
        total += np.mean((pa - pb) ** 2)
    sw = math.sqrt(total / n_dirs)
    # |mu'|_W = 1: every atom moves horizontally at unit speed
    return sw / (2 * h)


show("two_sliding_lines_sw_speed", two_sliding_lines_ratio())


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------

show("sj2_uniform01", integrate.quad(lambda x: x * (1 - x), 0, 1)[0])


def sj2_std_gaussian_clipped(clip=1e-12):
    # F(1-F)/f ~ 1/r in the tails, so the unclipped integral diverges
    # (logarithmically); the clip F(1-F) > clip is what makes it finite.
    # Find r* with F(r*)(1-F(r*)) = clip, integrate over |r| < r*.
    from scipy.optimize import brentq

    def g(r):
        return stats.norm.cdf(r) * stats.norm.sf(r) - clip

    rstar = brentq(g, 1.0, 40.0)
    val, _ = integrate.quad(
        lambda r: stats.norm.cdf(r) * stats.norm.sf(r) / stats.norm.pdf(r),
        -rstar, rstar, limit=400,
    )
    return rstar, val


_rstar, _sj2g = sj2_std_gaussian_clipped()
show("sj2_gaussian_clip_rstar", _rstar)
show("sj2_std_gaussian_clipped", _sj2g)


def square_marginal_density(th):
    # density of the projection of uniform([0,1]^2) onto direction
    # (cos th, sin th): convolution of two uniform densities of widths
    # c = cos th, s = sin th  -> trapezoid on [0, c+s]
    c, s = abs(math.cos(th)), abs(math.sin(th))
    lo, hi = min(c, s), max(c, s)

    def f(r):
        if r < 0 or r > c + s:
            return 0.0
        if lo == 0.0:
            return 1.0 / hi if 0 <= r <= hi else 0.0
        if r < lo:
            return r / (lo * hi)
        if r <= hi:
            return 1.0 / hi
        return (c + s - r) / (lo * hi)

    return f, c + s


def j2_for_angle(th):
    f, width = square_marginal_density(th)
    F = lambda r: integrate.quad(f, 0, r, limit=200)[0]
    val, _ = integrate.quad(
        lambda r: F(r) * (1 - F(r)) / f(r) if f(r) > 0 else 0.0,
        1e-9, width - 1e-9, limit=400,
    )
    return val


def sj2_unit_square():
    vals = [j2_for_angle(th) for th in np.linspace(1e-4, math.pi / 2 - 1e-4, 61)]
    # integrand is pi/2-periodic and symmetric; simple average over [0, pi/2]
    return float(np.mean(vals))


show("sj2_unit_square", sj2_unit_square())
show("cheeger_std_gaussian", math.sqrt(2.0 / math.pi))


def disk_slice_values(M=1.0):
    # uniform disk radius 1: every slice has density (2/pi) sqrt(1-r^2)
    f = lambda r: (2.0 / math.pi) * math.sqrt(max(1.0 - r * r, 0.0))
    F = lambda r: 0.5 + (r * math.sqrt(1 - r * r) + math.asin(r)) / math.pi
    j2, _ = integrate.quad(lambda r: F(r) * (1 - F(r)) / f(r), -1 + 1e-9, 1 - 1e-9)
    # cheeger of the slice: essinf f / min(F, 1-F); by symmetry scan r in [0,1)
    rs = np.linspace(0, 1 - 1e-9, 200001)
    ratios = [(2.0 / math.pi) * math.sqrt(1 - r * r) / (1 - F(r)) for r in rs]
    h = min(ratios)
    return j2, h, 2 * M / h


j2d, hd, bd = disk_slice_values()
show("sj2_unit_disk", j2d)          # SJ2 = J2 of any slice (rotation invariance)
show("cheeger_disk_slice", hd)
show("disk_bound_2M_over_h", bd)


# ---------------------------------------------------------------------------
# slopes
# ---------------------------------------------------------------------------

def wslope_gaussian_bump_on_disk(amp=1.0, sig=0.4):
    # V(x) = amp exp(-|x|^2/(2 sig^2)), mu = uniform disk radius 1
    # |grad V|^2 = (amp^2 |x|^2 / sig^4) exp(-|x|^2/sig^2)
    val, _ = integrate.quad(
        lambda r: (amp ** 2 * r ** 2 / sig ** 4) * math.exp(-(r / sig) ** 2) * 2 * r,
        0, 1,
    )  # 2 r dr = normalized disk measure in polar (1/pi * 2 pi r dr)
    return math.sqrt(val)


show("wslope_gauss_sig04_disk", wslope_gaussian_bump_on_disk())
