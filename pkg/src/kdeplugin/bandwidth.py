"""Optimal and pilot bandwidths, the integrated-squared-derivative estimators,
the plug-in bandwidth, and the Hoeffding-split diagnostics of its deviation."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from ._core import pair_sum
from .densities import (DensityFunctionals, MixtureDensity, density_functionals,
                        pdf_deriv)
from .gausspoly import GaussPoly
from .kernels import (KernelConstants, KernelSpec, kernel_constants,
                      pilot_convolution_functionals)
from .numerics import DEFAULT_QUAD, integrate

__all__ = [
    "BandwidthReport",
    "LinearizationDiagnostic",
    "optimal_bandwidth",
    "pilot_bandwidth",
    "estimate_IL",
    "plugin_bandwidth",
    "linearization_diagnostic",
    "conditional_pair_mean",
]

IL_VARIANTS = ("ustat", "convo", "squared")


def optimal_bandwidth(constants: KernelConstants, L: int, I_L: float, n: int) -> float:
    """MISE-optimal h0 = (R(K) / (2 L C_L^2 I_L))^(1/(2L+1)) n^(-1/(2L+1))."""
    if I_L <= 0:
        raise ValueError("I_L must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    p = 1.0 / (2 * L + 1)
    return (constants.R_K / (2 * L * constants.C_L**2 * I_L)) ** p * n ** (-p)


def pilot_bandwidth(dens: DensityFunctionals, pilot: KernelSpec, L: int, Lp: int,
                    n: int, variant: str = "ustat") -> float:
    """MSE-optimal pilot bandwidth for the chosen I_L estimator.

    The u-statistic estimator pairs with int (H^(2L) * H)^2 and int u^Lp H;
    the convolution estimator with int (H^(2L))^2 and int u^Lp (H*H).
    """
    if variant not in ("ustat", "convo", "squared"):
        raise ValueError(f"unknown variant {variant!r}")
    fun = pilot_convolution_functionals(pilot, L, Lp)
    if variant == "ustat":
        num = fun["int_H2L_conv_H_sq"]
        u_moment = fun["int_uLp_H"]
    else:  # convo and squared share the convolution-form constant
        num = fun["int_H2L_sq"]
        u_moment = fun["int_uLp_HconvH"]
    if u_moment == 0.0 or dens.cross_L_Lp == 0.0:
        raise ValueError("degenerate pilot-bandwidth denominator")
    c = ((4 * L + 1) * dens.int_f_sq**2 * num) / (
        Lp * factorial(Lp) ** -2 * u_moment**2 * dens.cross_L_Lp**2
    )
    p = 1.0 / (4 * L + 2 * Lp + 1)
    return c**p * n ** (-2.0 * p)


def _pair_kernel(pilot: KernelSpec, L: int, variant: str) -> GaussPoly:
    """The even pair kernel inside the I_L estimators."""
    if variant == "ustat":
        return pilot.derivative_gp(2 * L)
    hl = pilot.derivative_gp(L)
    return hl.convolve(hl)  # \bar H^{(L)} = H^{(L)} * H^{(L)}


def _pair_stat(data: np.ndarray, g: GaussPoly, b: float,
               support: float) -> float:
    xs = np.sort(np.asarray(data, dtype=float))
    cutoff = support * np.sqrt(g.s2)
    return pair_sum(xs, b, g.c, 1.0 / (2.0 * g.s2), cutoff)


def estimate_IL(data, pilot: KernelSpec, L: int, b: float,
                variant: str = "ustat") -> float:
    """Nonparametric estimate of I_L = int (f^(L))^2 with pilot bandwidth b."""
    data = np.asarray(data, dtype=float)
    n = data.size
    if n < 2:
        raise ValueError("need at least two observations")
    if b <= 0:
        raise ValueError("pilot bandwidth must be positive")
    if variant not in IL_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    g = _pair_kernel(pilot, L, variant)
    s = _pair_stat(data, g, b, pilot.effective_support)
    scale = b ** -(2 * L + 1)
    if variant == "ustat":
        return scale * s / comb(n, 2)
    off_diag = 2.0 * s  # both (i,j) orders
    if variant == "convo":
        return scale * off_diag / (n * (n - 1))
    # squared: the full plug-in of the convolution identity, diagonal included
    return scale * (float(g(0.0)) / n + off_diag / n**2)


@dataclass
class BandwidthReport:
    h_hat: float
    I_L_hat: float
    variant: str
    b0: float
    n: int
    h0: float = float("nan")
    I_L_true: float = float("nan")
    linear_term: float = float("nan")
    quadratic_term: float = float("nan")


def plugin_bandwidth(data, kernel: KernelSpec, pilot: KernelSpec, L: int, Lp: int,
                     b: float, variant: str = "ustat",
                     constants: KernelConstants | None = None,
                     truth: DensityFunctionals | None = None) -> BandwidthReport:
    """Plug-in bandwidth: h0's formula with |I_L estimate| substituted.

    The absolute value guards the u-statistic and convolution estimators,
    which can come out negative in small samples; the squared variant is
    non-negative by construction.
    """
    data = np.asarray(data, dtype=float)
    n = data.size
    consts = constants if constants is not None else kernel_constants(kernel)
    I_hat = estimate_IL(data, pilot, L, b, variant)
    if I_hat == 0.0:
        raise ValueError("degenerate sample: estimated I_L is exactly zero")
    h_hat = optimal_bandwidth(consts, L, abs(I_hat), n)
    report = BandwidthReport(h_hat=h_hat, I_L_hat=I_hat, variant=variant, b0=b, n=n)
    if truth is not None:
        report.I_L_true = truth.I_L
        report.h0 = optimal_bandwidth(consts, L, truth.I_L, n)
    return report


def conditional_pair_mean(model: MixtureDensity, pilot: KernelSpec, L: int,
                          b: float):
    """m(y) = E[ b^-(2L+1) H^(2L)((y - X)/b) ] for X ~ f, in closed form.

    Integration by parts turns the pair-kernel mean into the H-smoothed 2L-th
    density derivative, which is a GaussPoly convolution per mixture component.
    """
    Hb = pilot.gp.scale_arg(1.0 / b)  # H(v/b), variance b^2
    Hb = GaussPoly(Hb.c / b, Hb.s2)  # H_b = H(./b)/b

    pieces = []
    for w, m, s in model.components:
        base = GaussPoly([1.0 / (np.sqrt(2 * np.pi) * s)], s * s)
        g2L = base.nderiv(2 * L)  # 2L-th derivative of the N(m, s^2) density
        pieces.append((m, g2L.convolve(Hb), w))

    def m_of(y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y, dtype=float)
        for mu, gp, w in pieces:
            out += w * gp(y - mu)
        return out

    return m_of


@dataclass(frozen=True)
class LinearizationDiagnostic:
    exact_dev: float
    projection_dev: float
    quadratic_dev: float


def linearization_diagnostic(data, model: MixtureDensity, kernel: KernelSpec,
                             pilot: KernelSpec, L: int, Lp: int,
                             b: float) -> LinearizationDiagnostic:
    """Split (h_hat - h0)/h0 into its projection and quadratic components.

    The exact deviation uses the u-statistic plug-in; the projection part sums
    the centred density-derivative terms; the quadratic part is the degenerate
    remainder of the Hoeffding decomposition, with conditional means taken
    against the known model.
    """
    data = np.asarray(data, dtype=float)
    n = data.size
    consts = kernel_constants(kernel)
    dens = density_functionals(model, L, Lp)
    h0 = optimal_bandwidth(consts, L, dens.I_L, n)
    rep = plugin_bandwidth(data, kernel, pilot, L, Lp, b, "ustat",
                           constants=consts, truth=dens)
    exact = (rep.h_hat - h0) / h0

    C_PI = 2.0 / ((2 * L + 1) * dens.I_L)
    lo, hi = model.support(pad=1.0)
    E_f2LLp = integrate(
        lambda t: pdf_deriv(model, t, 2 * L + Lp) * pdf_deriv(model, t, 0),
        lo, hi, DEFAULT_QUAD,
    )
    u_moment = pilot.gp.moment(Lp)
    V = (pdf_deriv(model, data, 2 * L) - dens.E_f2L) + (
        u_moment / factorial(Lp) * b**Lp
    ) * (pdf_deriv(model, data, 2 * L + Lp) - E_f2LLp)
    projection = -C_PI * float(np.mean(V))

    # quadratic: sum over i<j of (I_ij - m_i - m_j + E I_ij)
    g = pilot.derivative_gp(2 * L)
    pair_total = _pair_stat(data, g, b, pilot.effective_support) * b ** -(2 * L + 1)
    m_of = conditional_pair_mean(model, pilot, L, b)
    m_vals = m_of(data)
    EI = integrate(lambda t: m_of(t) * pdf_deriv(model, t, 0), lo, hi, DEFAULT_QUAD)
    npairs = comb(n, 2)
    w_total = pair_total - (n - 1) * float(np.sum(m_vals)) + npairs * EI
    quadratic = -0.5 * C_PI * w_total / npairs

    return LinearizationDiagnostic(exact, projection, quadratic)
