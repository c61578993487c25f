"""Kernel density estimation with a global plug-in bandwidth, higher-order
distribution approximations for the standardised estimator, and a Monte Carlo
coverage laboratory."""

from ._core import BACKEND as core_backend
from .bandwidth import (BandwidthReport, LinearizationDiagnostic, estimate_IL,
                        linearization_diagnostic, optimal_bandwidth,
                        pilot_bandwidth, plugin_bandwidth)
from .coverage import (CoverageRow, CoverageTable, SimConfig, emit_table,
                       make_intervals, run_coverage, run_replication)
from .densities import (DensityFunctionals, MixtureDensity, density_functionals,
                        marron_wand, pdf, pdf_deriv, sample, smoothed_mean)
from .edgeworth import (ExpansionContext, build_context, cdf_approx,
                        cornish_fisher_quantile, hall_polynomials, mu_series,
                        pilot_polynomials, plugin_polynomials,
                        power_series_coeffs, student_polynomials)
from .kernels import (KernelConstants, KernelSpec, gaussian_kernel,
                      hermite_order_kernel, kernel_constants, kernel_moment,
                      kernel_tau, pilot_convolution_functionals)
from .numerics import (IntegrationError, QuadratureSpec, RngStream, find_root,
                       integrate, integrate2d, standard_normal_draws)
from .statistics import (StatContext, gamma_functionals, kde, make_stat_context,
                         standardized_stat, studentized_stat, variance_estimate)

__version__ = "0.1.0"
