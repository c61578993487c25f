"""Kernel functions of general even order with derivatives, moments and the
convolution functionals used by the pilot-bandwidth formulas.

All kernels here are Gaussian-Hermite: an even polynomial times the standard
normal density, so derivatives of any order are exact (see ``gausspoly``).
Moment-type functionals are nevertheless computed by quadrature over the
effective support; the closed forms serve as independent oracles in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .gausspoly import GaussPoly, SQRT_2PI
from .numerics import DEFAULT_QUAD, QuadratureSpec, integrate

__all__ = [
    "KernelSpec",
    "KernelConstants",
    "gaussian_kernel",
    "hermite_order_kernel",
    "kernel_moment",
    "kernel_tau",
    "kernel_constants",
    "pilot_convolution_functionals",
]

EFFECTIVE_SUPPORT = 8.0  # half-width, in Gaussian standard deviations


@dataclass(frozen=True)
class KernelSpec:
    """A kernel of order `order` with analytic derivatives up to any order."""

    name: str
    order: int
    gp: GaussPoly
    effective_support: float = EFFECTIVE_SUPPORT
    _derivs: dict = field(default_factory=dict, repr=False, compare=False)

    def evaluate(self, u):
        return self.gp(u)

    def __call__(self, u):
        return self.gp(u)

    def derivative_gp(self, k: int) -> GaussPoly:
        if k == 0:
            return self.gp
        if k not in self._derivs:
            self._derivs[k] = self.derivative_gp(k - 1).deriv()
        return self._derivs[k]

    def derivative(self, k: int, u):
        if k < 0:
            raise ValueError("derivative order must be >= 0")
        return self.derivative_gp(k)(u)


def gaussian_kernel() -> KernelSpec:
    """The standard normal density as a second-order kernel."""
    return KernelSpec("gaussian", 2, GaussPoly([1.0 / SQRT_2PI], 1.0))


def hermite_order_kernel(order: int) -> KernelSpec:
    """Gaussian-times-even-polynomial kernel of the given even order.

    The polynomial coefficients solve the vanishing-moment system
    int u^l K = delta_{l,0} for even l < order; odd moments vanish by symmetry.
    """
    if order < 2 or order % 2:
        raise ValueError("kernel order must be a positive even integer")
    if order == 2:
        return gaussian_kernel()
    r = order // 2
    # K(u) = phi(u) * sum_{j<r} a_j u^{2j}; moments of phi: E u^{2m} = (2m-1)!!
    A = np.empty((r, r))
    for row in range(r):  # constraint on int u^{2 row} K
        for j in range(r):
            m = row + j
            A[row, j] = _dfact(2 * m - 1)
    rhs = np.zeros(r)
    rhs[0] = 1.0
    a = np.linalg.solve(A, rhs)
    c = np.zeros(2 * r - 1)
    c[::2] = a / SQRT_2PI
    return KernelSpec(f"hermite{order}", order, GaussPoly(c, 1.0))


def _dfact(m: int) -> float:
    out = 1.0
    for t in range(m, 1, -2):
        out *= t
    return out


def kernel_moment(spec: KernelSpec, s: int, t: int = 1,
                  quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """kappa_st = int u^s K(u)^t du by quadrature over the effective support."""
    if s < 0 or t < 1:
        raise ValueError("need s >= 0 and t >= 1")
    half = spec.effective_support

    def f(u):
        return u**s * spec.gp(u) ** t

    return integrate(f, -half, half, quad)


def kernel_tau(spec: KernelSpec, l: int, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """tau_l = int u^l { K(u) K'(u) u + K(u)^2 } du."""
    if l < 0:
        raise ValueError("need l >= 0")
    half = spec.effective_support
    kp = spec.derivative_gp(1)

    def f(u):
        k = spec.gp(u)
        return u**l * (k * kp(u) * u + k * k)

    return integrate(f, -half, half, quad)


@dataclass
class KernelConstants:
    """Memoised moment functionals for one kernel."""

    spec: KernelSpec
    C_L: float
    R_K: float
    _kappa: dict = field(default_factory=dict, repr=False)
    _tau: dict = field(default_factory=dict, repr=False)

    def kappa(self, s: int, t: int) -> float:
        key = (s, t)
        if key not in self._kappa:
            self._kappa[key] = kernel_moment(self.spec, s, t)
        return self._kappa[key]

    def tau(self, l: int) -> float:
        if l not in self._tau:
            self._tau[l] = kernel_tau(self.spec, l)
        return self._tau[l]


def kernel_constants(spec: KernelSpec) -> KernelConstants:
    """C_L = (1/L!) int u^L K and R(K) = int K^2, with memoised accessors."""
    L = spec.order
    C_L = kernel_moment(spec, L, 1) / factorial(L)
    R_K = kernel_moment(spec, 0, 2)
    kc = KernelConstants(spec, C_L, R_K)
    kc._kappa[(L, 1)] = C_L * factorial(L)
    kc._kappa[(0, 2)] = R_K
    return kc


def pilot_convolution_functionals(pilot: KernelSpec, L: int, Lp: int,
                                  quad: QuadratureSpec = DEFAULT_QUAD) -> dict:
    """The four integrals entering the MSE-optimal pilot bandwidths.

    Convolutions are formed in closed Gaussian-Hermite algebra; the outer
    integrals run through quadrature on a widened support (the convolution of
    two kernels spreads mass by the root-sum-square of the scales).
    """
    H = pilot.gp
    H2L = pilot.derivative_gp(2 * L)
    conv_wide = pilot.effective_support * 2.0

    H2L_conv_H = H2L.convolve(H)
    HH = H.convolve(H)

    def sq(g):
        return lambda u: g(u) ** 2

    return {
        "int_H2L_conv_H_sq": integrate(sq(H2L_conv_H), -conv_wide, conv_wide, quad),
        "int_H2L_sq": integrate(sq(H2L), -pilot.effective_support,
                                pilot.effective_support, quad),
        "int_uLp_HconvH": integrate(lambda u: u**Lp * HH(u), -conv_wide, conv_wide,
                                    quad),
        "int_uLp_H": kernel_moment(pilot, Lp, 1, quad),
    }
