"""The kernel density estimate, its variance estimator, the bandwidth
sensitivity sums, and the standardised / Studentised statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._core import point_sum
from .densities import MixtureDensity, pdf, smoothed_mean
from .gausspoly import GaussPoly
from .kernels import KernelSpec
from .numerics import DEFAULT_QUAD, QuadratureSpec, integrate

__all__ = [
    "StatContext",
    "kde",
    "variance_estimate",
    "gamma_functionals",
    "standardized_stat",
    "studentized_stat",
    "make_stat_context",
    "population_mu20",
]


def _point(data, gp: GaussPoly, x: float, h: float, support: float) -> float:
    cutoff = support * np.sqrt(gp.s2)
    return point_sum(np.asarray(data, dtype=float), x, h, gp.c,
                     1.0 / (2.0 * gp.s2), cutoff)


def kde(data, kernel: KernelSpec, h: float, x: float) -> float:
    """f_hat(x) = (1/(n h)) sum K((X_i - x)/h)."""
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        raise ValueError("empty sample")
    if h <= 0:
        raise ValueError("h must be positive")
    return _point(data, kernel.gp, x, h, kernel.effective_support) / (data.size * h)


def variance_estimate(data, kernel: KernelSpec, h: float, x: float) -> float:
    """Sample version of mu_20: h^-1 { mean K^2 - (mean K)^2 }."""
    data = np.asarray(data, dtype=float)
    n = data.size
    if n < 2:
        raise ValueError("need at least two observations")
    if h <= 0:
        raise ValueError("h must be positive")
    k2 = kernel.gp.mul(kernel.gp)
    s1 = _point(data, kernel.gp, x, h, kernel.effective_support) / n
    s2 = _point(data, k2, x, h, kernel.effective_support) / n
    return max((s2 - s1 * s1) / h, 0.0)


def _gamma1_gp(kernel: KernelSpec) -> GaussPoly:
    P = np.polynomial.polynomial
    kp = kernel.derivative_gp(1)
    return GaussPoly(P.polyadd(P.polymul([0.0, 1.0], kp.c), kernel.gp.c), kernel.gp.s2)


def _gamma2_gp(kernel: KernelSpec) -> GaussPoly:
    P = np.polynomial.polynomial
    kp = kernel.derivative_gp(1)
    kpp = kernel.derivative_gp(2)
    c = P.polyadd(2.0 * kernel.gp.c, P.polymul([0.0, 4.0], kp.c))
    c = P.polyadd(c, P.polymul([0.0, 0.0, 1.0], kpp.c))
    return GaussPoly(c, kernel.gp.s2)


def gamma_functionals(data, kernel: KernelSpec, h: float, x: float) -> dict:
    """First and second h-sensitivity sums of the KDE at x.

    gamma1 = (1/(n h)) sum { K' u + K } and
    gamma2 = (1/(n h)) sum { 2K + 4 K' u + K'' u^2 }, with u = (X_i - x)/h.
    """
    data = np.asarray(data, dtype=float)
    n = data.size
    if n == 0:
        raise ValueError("empty sample")
    sup = kernel.effective_support
    return {
        "gamma1": _point(data, _gamma1_gp(kernel), x, h, sup) / (n * h),
        "gamma2": _point(data, _gamma2_gp(kernel), x, h, sup) / (n * h),
    }


@dataclass(frozen=True)
class StatContext:
    """Population centering and scale for the standardised statistic."""

    x: float
    center: float  # E f_hat_{h0}(x)
    mu20: float
    h0: float

    def __post_init__(self):
        if self.mu20 <= 0 or self.h0 <= 0:
            raise ValueError("mu20 and h0 must be positive")


def population_mu20(model: MixtureDensity, kernel: KernelSpec, h: float, x: float,
                    quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """mu_20(h) = int K(u)^2 f(x+uh) du - h (int K(u) f(x+uh) du)^2."""
    half = kernel.effective_support
    k2 = kernel.gp.mul(kernel.gp)
    int_k2 = integrate(lambda u: k2(u) * pdf(model, x + u * h), -half, half, quad)
    sm = smoothed_mean(model, kernel, h, x, quad)
    return int_k2 - h * sm * sm


def make_stat_context(model: MixtureDensity, kernel: KernelSpec, h0: float,
                      x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> StatContext:
    return StatContext(
        x=x,
        center=smoothed_mean(model, kernel, h0, x, quad),
        mu20=population_mu20(model, kernel, h0, x, quad),
        h0=h0,
    )


def standardized_stat(data, kernel: KernelSpec, h_used: float,
                      ctx: StatContext) -> float:
    """sqrt(n h) (f_hat_h(x) - center) / sqrt(mu20), at h = h_used."""
    data = np.asarray(data, dtype=float)
    if h_used <= 0:
        raise ValueError("h_used must be positive")
    f_hat = kde(data, kernel, h_used, ctx.x)
    return np.sqrt(data.size * h_used) * (f_hat - ctx.center) / np.sqrt(ctx.mu20)


def studentized_stat(data, kernel: KernelSpec, h_used: float, x: float,
                     center: float) -> float:
    """Same statistic scaled by the estimated variance at the same h_used."""
    data = np.asarray(data, dtype=float)
    v = variance_estimate(data, kernel, h_used, x)
    if v <= 0.0:
        raise ValueError("degenerate sample: zero variance estimate")
    f_hat = kde(data, kernel, h_used, x)
    return np.sqrt(data.size * h_used) * (f_hat - center) / np.sqrt(v)
