"""Causal models between time-coarse-grained variables of a bivariate AR(1) chain."""

__version__ = "0.1.0"

from .kernels import (Kernel, TruncationError, TruncationPolicy, compatible_partner,
                      geometric_inverse_apply, inner_product, macro_noise_variance_x,
                      macro_noise_variance_y, shift)
from .process import (CovarianceSpec, GaussianSpec, InterventionSpec, InvalidParamsError,
                      ModelParams, Trajectory, interventional_distribution, interventional_slope,
                      observational_slope, simulate, stationary_covariance)
from .macro import exact_transformation_check, macro_value, sample_interventional_macro, sample_joint_macro
from .frequency import fourier_window, transfer_coefficient
