"""Sliced-Wasserstein metric geometry: distances, Radon-domain calculus,
Sobolev norms, metric slopes, and estimation-rate experiments.

The submodules split along the objects they act on:

- ``measures``   discrete and grid measures, sampling, serialization
- ``ot1d``       exact one-dimensional optimal transport on the line
- ``radon``      direction sets, Radon transform, dual, inversion
- ``sobolev``    homogeneous/attenuated Sobolev norms, slice isometry
- ``swdist``     sliced distances, curves, midpoints, the action functional
- ``slopes``     potential energies, metric slopes, gradient-flow flux
- ``stats``      SJ2/Cheeger functionals, rate and comparison experiments
- ``cli``        batch driver and the verification suite
"""

__version__ = "0.1.0"

from .measures import (
    DiscreteMeasure,
    GridDensity,
    GridField,
    disk_density,
    from_points,
    gaussian_density,
    load_grid,
    load_measure_csv,
    sample_empirical,
    save_grid,
    save_measure_csv,
    second_moment,
    stream,
    uniform_box_density,
    winfty_discrete,
)
from .ot1d import Slice1D, displacement_1d, w_infty_1d, w_p_1d, weighted_hneg1
from .radon import (
    DirectionSet,
    SlicedField,
    SliceMeasureFamily,
    dual_radon,
    fourier_slice_gap,
    inversion_constant,
    invert_radon,
    lambda_d,
    make_directions,
    make_r_grid,
    project_discrete,
    project_grid_exact,
    radon_grid,
    slice_multiplier,
)
from .sobolev import hdot_norm_sliced, hts_norm_grid, isometry_gap
from .swdist import (
    CurveDiscretization,
    SlicedFlux,
    b_sw,
    curve_length,
    lsw_upper_linear,
    metric_derivative_fd,
    midpoint_gap,
    sw_p,
    w2_discrete,
)
from .slopes import (
    Potential,
    dissipation_check,
    gf_flux,
    hdot_slope,
    sw_slope_ac_upper,
    sw_slope_discrete,
    sw_slope_interval,
    sw_slope_probe,
    w_slope,
)
from .stats import (
    RateReport,
    VCReport,
    cheeger_1d,
    discrete_comparison,
    rate_experiment,
    sj2,
    sj2_cheeger_bound,
    vc_bound,
    vc_statistic,
)

__all__ = [
    "__version__",
    # measures
    "DiscreteMeasure", "GridDensity", "GridField", "disk_density", "from_points",
    "gaussian_density", "load_grid", "load_measure_csv", "sample_empirical",
    "save_grid", "save_measure_csv", "second_moment", "stream",
    "uniform_box_density", "winfty_discrete",
    # ot1d
    "Slice1D", "displacement_1d", "w_infty_1d", "w_p_1d", "weighted_hneg1",
    # radon
    "DirectionSet", "SlicedField", "SliceMeasureFamily", "dual_radon",
    "fourier_slice_gap", "inversion_constant", "invert_radon", "lambda_d",
    "make_directions", "make_r_grid", "project_discrete", "project_grid_exact",
    "radon_grid",
    "slice_multiplier",
    # sobolev
    "hdot_norm_sliced", "hts_norm_grid", "isometry_gap",
    # swdist
    "CurveDiscretization", "SlicedFlux", "b_sw", "curve_length",
    "lsw_upper_linear", "metric_derivative_fd", "midpoint_gap", "sw_p",
    "w2_discrete",
    # slopes
    "Potential", "dissipation_check", "gf_flux", "hdot_slope",
    "sw_slope_ac_upper", "sw_slope_discrete", "sw_slope_interval",
    "sw_slope_probe", "w_slope",
    # stats
    "RateReport", "VCReport", "cheeger_1d", "discrete_comparison",
    "rate_experiment", "sj2", "sj2_cheeger_bound", "vc_bound", "vc_statistic",
]
