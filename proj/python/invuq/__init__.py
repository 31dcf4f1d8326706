"""Bayesian inverse problems: priors, samplers and diagnostics."""

from ._invuq import (
    CapabilityError,
    DimensionError,
    DomainError,
    Error,
    InvalidArgument,
    autocorrelation,
    cgls,
    cli_run,
    cwmh,
    deconvolution_1d,
    deconvolution_2d,
    difference_matrix,
    ess,
    gaussian_kernel,
    gmrf_precision,
    gravity_forward,
    gravity_jacobian,
    iact,
    mala,
    mh,
    nuts,
    quantile,
    rhat,
    sample_deconvolution_1d,
    sample_eight_schools,
    sample_gravity,
    ula,
)

__version__ = "0.1.0"
