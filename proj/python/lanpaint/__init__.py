"""Python bindings for the lanpaint conditional diffusion sampler."""

from ._core import (
    ConfigError,
    InvalidRange,
    LanPaintConfig,
    NumericalError,
    aux_functions,
    bench_gaussian,
    bench_gmm,
    gaussian_score,
    gmm_score,
    inpaint_gaussian,
    inpaint_gmm,
    loglog_slope,
    score_ratio_curve,
    sho_moments,
    sho_step,
)

METHODS = ("replace", "repaint", "langevin", "lanpaint")

__all__ = [
    "METHODS",
    "ConfigError",
    "InvalidRange",
    "LanPaintConfig",
    "NumericalError",
    "aux_functions",
    "bench_gaussian",
    "bench_gmm",
    "gaussian_score",
    "gmm_score",
    "inpaint_gaussian",
    "inpaint_gmm",
    "loglog_slope",
    "score_ratio_curve",
    "sho_moments",
    "sho_step",
]
