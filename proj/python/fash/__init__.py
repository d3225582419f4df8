"""Empirical-Bayes shrinkage of effect functions with integrated Wiener process priors."""

from ._fash import (  # noqa: F401
    DataError,
    InvalidArgument,
    NumericFailure,
    Unit,
    __version__,
    adjust_se,
    default_grid,
    fit,
    iwp_covariance,
    marginal_loglik,
    marginal_loglik_dense,
    psd,
    psd_to_sigma,
    read_long_csv,
    run_cli,
    simulate,
    smooth,
)
