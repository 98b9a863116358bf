"""Command-line driver: batch experiments and the verification suite.

Reports are plain CSV with 17 significant digits so identical inputs give
byte-identical files; anything run-dependent (timestamps, wall time, version,
resolved options) goes to a separate metadata block — a ``<out>.meta.json``
sidecar when ``--out`` is set, stderr otherwise.

Exit codes: 0 success, 1 input/configuration error, 2 tolerance failure in
``verify`` mode.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .. import __version__, measures, radon, slopes, stats, sobolev, swdist
from ..measures import from_points
from . import verify as verify_mod
from .config import ConfigError, apply_config, parse_config

_FMT = "%.17g"

GLOBAL_OPTS = {
    "dirs": int,
    "grid": int,
    "seed": int,
    "threads": int,
    "tol_scale": float,
    "out": str,
}

EXTRA_OPTS = {
    "swdist": {"mu": str, "nu": str, "p": float, "bandwidth": float},
    "radon-check": {},
    "sobolev-check": {},
    "slope": {"potential": str, "measure": str, "probe_h": float},
    "rate": {"density": str, "n": str, "trials": int},
    "compare-discrete": {"eps": str, "trials": int, "n_atoms": int},
    "midpoint-gap": {"resolution": int, "starts": int},
    "verify": {"suite": str, "n_atoms": int},
}

DEFAULTS = {
    "swdist": {"dirs": 180, "grid": 256, "seed": 0, "threads": 1, "tol_scale": 1.0,
               "p": 2.0, "bandwidth": 0.1},
    "radon-check": {"dirs": 180, "grid": 256, "seed": 0, "threads": 1, "tol_scale": 1.0},
    "sobolev-check": {"dirs": 180, "grid": 256, "seed": 0, "threads": 1, "tol_scale": 1.0},
    "slope": {"dirs": 180, "grid": 256, "seed": 0, "threads": 1, "tol_scale": 1.0,
              "probe_h": 1e-3},
    "rate": {"dirs": 64, "grid": 128, "seed": 0, "threads": 1, "tol_scale": 1.0,
             "density": "uniform-square", "n": "64,256,1024,4096", "trials": 50},
    "compare-discrete": {"dirs": 64, "grid": 128, "seed": 0, "threads": 1, "tol_scale": 1.0,
                         "eps": "0.1,0.03,0.01,0.003", "trials": 30, "n_atoms": 5},
    "midpoint-gap": {"dirs": 96, "grid": 128, "seed": 0, "threads": 1, "tol_scale": 1.0,
                     "resolution": 8, "starts": 4},
    "verify": {"seed": 0, "threads": 1, "tol_scale": 1.0, "suite": "all"},
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; 2 is reserved for tolerance
    failures here, so redirect usage errors to exit code 1."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="swgeo", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, **extra_flags):
        sp = sub.add_parser(name)
        sp.add_argument("--dirs", type=int)
        sp.add_argument("--grid", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--tol-scale", dest="tol_scale", type=float)
        sp.add_argument("--config")
        for flag, kind in extra_flags.items():
            sp.add_argument("--" + flag.replace("_", "-"), dest=flag, type=kind)
        return sp

    add("swdist", mu=str, nu=str, p=float, bandwidth=float)
    add("radon-check")
    add("sobolev-check")
    add("slope", potential=str, measure=str, probe_h=float)
    add("rate", density=str, n=str, trials=int)
    add("compare-discrete", eps=str, trials=int, n_atoms=int)
    add("midpoint-gap", resolution=int, starts=int)
    vp = add("verify", n_atoms=int)
    vp.add_argument("suite", nargs="?", default=None)
    return parser


# ---------------------------------------------------------------------------
# option resolution: CLI flag > config file > default
# ---------------------------------------------------------------------------


def _config_values(path: str, command: str) -> dict:
    """Read a config file and return {option: value} for `command`.

    Top-level keys are the shared flags; `[subcommand]` sections hold that
    command's full option set.  Unknown sections or keys are rejected with
    the offending key and line number.
    """
    entries = parse_config(path)
    normalized = {}
    for key, pair in entries.items():
        if "." in key:
            sec, opt = key.split(".", 1)
            normalized[sec + "." + opt.replace("-", "_")] = pair
        else:
            normalized[key.replace("-", "_")] = pair
    allowed = {}
    for cmd, extras in EXTRA_OPTS.items():
        for opt, conv in {**GLOBAL_OPTS, **extras}.items():
            allowed[f"{cmd}.{opt}"] = conv
    for opt, conv in GLOBAL_OPTS.items():
        allowed[opt] = conv
    values = apply_config(normalized, allowed, path)
    picked = {}
    for key, val in values.items():
        if "." not in key:
            picked.setdefault(key, val)
    for key, val in values.items():
        if key.startswith(command + "."):
            picked[key.split(".", 1)[1]] = val
    return picked


def _resolve_options(args: argparse.Namespace, command: str) -> dict:
    from_config = _config_values(args.config, command) if args.config else {}
    opts = {}
    names = set(GLOBAL_OPTS) | set(EXTRA_OPTS[command])
    for name in names:
        cli_val = getattr(args, name, None)
        if cli_val is not None:
            opts[name] = cli_val
        elif name in from_config:
            opts[name] = from_config[name]
        else:
            opts[name] = DEFAULTS[command].get(name)
    return opts


def _require(opts: dict, command: str, *names: str) -> None:
    for name in names:
        if opts.get(name) is None:
            raise ValueError(f"{command}: missing required option --{name.replace('_', '-')}")


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return _FMT % float(x)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _emit(opts: dict, command: str, header: str, rows: list, extra_meta=None, t0=None) -> None:
    body = "\n".join([header] + rows) + "\n"
    meta = {
        "command": command,
        "library": "swgeo",
        "version": __version__,
        "options": {k: v for k, v in sorted(opts.items()) if v is not None},
        "wall_time_s": round(time.perf_counter() - t0, 6) if t0 is not None else None,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if extra_meta:
        meta.update(extra_meta)
    meta = _json_safe(meta)
    if opts.get("out"):
        out = Path(opts["out"])
        out.write_text(body)
        Path(str(out) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(body)
        sys.stderr.write(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _load_measure(path: str):
    if str(path).endswith(".csv"):
        return measures.load_measure_csv(path)
    return measures.load_grid(path, kind="density")


def _int_list(text: str) -> list:
    return [int(tok) for tok in str(text).split(",") if tok.strip()]


def _float_list(text: str) -> list:
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_swdist(opts) -> int:
    t0 = time.perf_counter()
    _require(opts, "swdist", "mu", "nu")
    mu = _load_measure(opts["mu"])
    nu = _load_measure(opts["nu"])
    if mu.dim != nu.dim:
        raise ValueError("swdist: measures have different dimensions")
    dirs = radon.make_directions(mu.dim, opts["dirs"])
    sw = swdist.sw_p(mu, nu, opts["p"], dirs, threads=opts["threads"])
    discrete = isinstance(mu, measures.DiscreteMeasure) and isinstance(nu, measures.DiscreteMeasure)
    any_discrete = isinstance(mu, measures.DiscreteMeasure) or isinstance(nu, measures.DiscreteMeasure)
    w2_scaled = (
        swdist.w2_discrete(mu, nu) / math.sqrt(mu.dim) if discrete else math.nan
    )
    bandwidth = opts["bandwidth"] if any_discrete else None
    lsw = swdist.lsw_upper_linear(mu, nu, dirs, bandwidth=bandwidth, threads=opts["threads"])
    _emit(opts, "swdist", "sw_p,w2_over_sqrtd,lsw_upper",
          [",".join(_fmt(v) for v in (sw, w2_scaled, lsw))], t0=t0)
    return 0


def _cmd_radon_check(opts) -> int:
    t0 = time.perf_counter()
    n = opts["grid"]
    f = measures.gaussian_density([[-2.0, 2.0], [-2.0, 2.0]], (n, n), (0.0, 0.0), 0.35)
    dirs = radon.make_directions(2, opts["dirs"])
    g = radon.radon_grid(f, dirs, threads=opts["threads"])
    rec = radon.invert_radon(g, f.box, f.shape, threads=opts["threads"])
    rel = float(np.linalg.norm(rec.values - f.values) / np.linalg.norm(f.values))
    mass_err = float(np.abs(g.slice_masses() - 1.0).max())
    fourier = radon.fourier_slice_gap(f, dirs)
    _emit(opts, "radon-check", "rel_l2,fourier_gap,mass_err",
          [",".join(_fmt(v) for v in (rel, fourier, mass_err))], t0=t0)
    return 0


def _cmd_sobolev_check(opts) -> int:
    t0 = time.perf_counter()
    f = verify_mod._offset_gaussian_diff(opts["grid"])
    dirs = radon.make_directions(2, opts["dirs"])
    gap = sobolev.isometry_gap(f, dirs, threads=opts["threads"])
    grid_norm = sobolev.hts_norm_grid(f, -1.5, -1.5)
    _emit(opts, "sobolev-check", "rel_gap,grid_norm",
          [",".join(_fmt(v) for v in (gap, grid_norm))], t0=t0)
    return 0


def _cmd_slope(opts) -> int:
    t0 = time.perf_counter()
    _require(opts, "slope", "potential", "measure")
    field = measures.load_grid(opts["potential"], kind="field")
    v = slopes.Potential.from_grid(field)
    mu = _load_measure(opts["measure"])
    dirs = radon.make_directions(mu.dim, opts["dirs"])
    w = slopes.w_slope(v, mu)
    lo, hi = slopes.sw_slope_interval(v, mu, dirs, threads=opts["threads"])
    try:
        hd = slopes.hdot_slope(v)
    except ValueError:
        # the smoothness norm needs boundary decay; the bracket above may not
        hd = math.nan
    _emit(opts, "slope", "w_slope,sw_slope_lo,sw_slope_hi,hdot_slope",
          [",".join(_fmt(x) for x in (w, lo, hi, hd))], t0=t0)
    return 0


_STOCK_DENSITIES = {
    "uniform-square": lambda n: measures.uniform_box_density([[0.0, 1.0], [0.0, 1.0]], (n, n)),
    "gaussian": lambda n: measures.gaussian_density([[-2.0, 2.0], [-2.0, 2.0]], (n, n), (0.0, 0.0), 0.5),
    "disk": lambda n: measures.disk_density([[-1.05, 1.05], [-1.05, 1.05]], (n, n), (0.0, 0.0), 1.0),
}


def _cmd_rate(opts) -> int:
    t0 = time.perf_counter()
    name = opts["density"]
    if name not in _STOCK_DENSITIES:
        raise ValueError(
            f"rate: unknown density {name!r}; valid: {', '.join(sorted(_STOCK_DENSITIES))}"
        )
    mu = _STOCK_DENSITIES[name](opts["grid"])
    n_values = _int_list(opts["n"])
    dirs = radon.make_directions(2, opts["dirs"])
    report = stats.rate_experiment(
        mu, n_values, opts["trials"], opts["seed"], dirs, threads=opts["threads"]
    )
    rows = [
        ",".join((_fmt(n), _fmt(trial), _fmt(sw), _fmt(lsw), _fmt(bound)))
        for n, trial, sw, lsw, bound in report.rows()
    ]
    extra = {
        "fit_slope": report.slope,
        "fit_slope_stderr": report.slope_stderr,
        "sj2": report.sj2_value,
        "bound_constant_c": report.c,
    }
    _emit(opts, "rate", "n,trial,sw,lsw_upper,bound", rows, extra_meta=extra, t0=t0)
    return 0


def _lattice_atoms(n: int):
    k = max(2, math.ceil(math.sqrt(n)))
    pts = [[float(i), float(j)] for j in range(k) for i in range(k)][:n]
    return from_points(pts)


def _cmd_compare_discrete(opts) -> int:
    t0 = time.perf_counter()
    if opts["n_atoms"] < 2:
        raise ValueError("compare-discrete: --n-atoms must be at least 2")
    mu = _lattice_atoms(opts["n_atoms"])
    dirs = radon.make_directions(2, opts["dirs"])
    rows_data = stats.discrete_comparison(
        mu, _float_list(opts["eps"]), opts["trials"], opts["seed"], dirs
    )
    keys = ("eps", "trial", "w2_over_d", "sw2", "winfty", "ratio1", "ratio2")
    rows = [",".join(_fmt(r[k]) for k in keys) for r in rows_data]
    _emit(opts, "compare-discrete", ",".join(keys), rows, t0=t0)
    return 0


def _cmd_midpoint_gap(opts) -> int:
    t0 = time.perf_counter()
    mu0 = from_points([[-1.0, -1.0], [1.0, 1.0]])
    mu1 = from_points([[-1.0, 1.0], [1.0, -1.0]])
    corners = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
    gap = swdist.midpoint_gap(
        mu0, mu1, corners, radon.make_directions(2, opts["dirs"]),
        scan_resolution=opts["resolution"], polish_starts=opts["starts"],
    )
    sw2 = swdist.sw_p(mu0, mu1, 2.0, radon.make_directions(2, 720), threads=opts["threads"]) ** 2
    _emit(opts, "midpoint-gap", "gap,sw2", [",".join(_fmt(v) for v in (gap, sw2))], t0=t0)
    return 0


def _cmd_verify(opts) -> int:
    t0 = time.perf_counter()
    suite = opts.get("suite") or "all"
    if suite == "all":
        names = list(verify_mod.SUITE)
    elif suite in verify_mod.SUITE:
        names = [suite]
    else:
        raise ValueError(
            f"verify: unknown suite {suite!r}; valid: all, {', '.join(verify_mod.SUITE)}"
        )
    overrides = {}
    if opts.get("n_atoms") is not None:
        overrides["n_atoms"] = opts["n_atoms"]
    results = verify_mod.run_suite(
        names, seed=opts["seed"], threads=opts["threads"],
        tol_scale=opts["tol_scale"], **overrides,
    )
    for res in results:
        print(res.line())
    if opts.get("out"):
        rows = []
        for res in results:
            detail = " ".join(f"{k}={_FMT % v}" for k, v in res.values.items())
            rows.append(f"{res.name},{int(res.passed)},{detail}")
        runtimes = {res.name: round(res.runtime, 3) for res in results}
        _emit(opts, "verify", "name,passed,detail", rows,
              extra_meta={"runtimes_s": runtimes}, t0=t0)
    return 0 if all(res.passed for res in results) else 2


_HANDLERS = {
    "swdist": _cmd_swdist,
    "radon-check": _cmd_radon_check,
    "sobolev-check": _cmd_sobolev_check,
    "slope": _cmd_slope,
    "rate": _cmd_rate,
    "compare-discrete": _cmd_compare_discrete,
    "midpoint-gap": _cmd_midpoint_gap,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        opts = _resolve_options(args, args.command)
        return _HANDLERS[args.command](opts)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        if isinstance(exc, OSError):
            msg = str(exc)  # args[0] alone would be the bare errno
        else:
            msg = exc.args[0] if exc.args else exc
        print(f"swgeo: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
