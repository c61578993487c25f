"""Closed algebra of polynomial-times-Gaussian functions.

Every kernel in this package (the Gaussian kernel, the higher-order
Gaussian-Hermite kernels, all their derivatives, and their convolutions) has
the form p(u) * exp(-u^2 / (2 s2)) for a polynomial p.  This family is closed
under differentiation, products, and convolution, and all of its moments are
exact finite sums over Gaussian moments.  Keeping that structure explicit lets
U-statistic kernels of high derivative order be evaluated without any
finite-difference noise, and gives independent closed forms against which the
quadrature routines can be checked.
"""

from __future__ import annotations

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)

__all__ = ["GaussPoly", "SQRT_2PI", "hermite_coeffs"]


def hermite_coeffs(k: int) -> np.ndarray:
    """Ascending coefficients of the probabilists' Hermite polynomial He_k."""
    if k < 0:
        raise ValueError("k must be >= 0")
    prev = np.array([1.0])
    if k == 0:
        return prev
    cur = np.array([0.0, 1.0])
    for m in range(1, k):
        # He_{m+1}(x) = x He_m(x) - m He_{m-1}(x)
        nxt = np.zeros(m + 2)
        nxt[1:] = cur
        nxt[: m] -= m * prev
        prev, cur = cur, nxt
    return cur


def _double_factorial(m: int) -> float:
    out = 1.0
    for t in range(m, 1, -2):
        out *= t
    return out


class GaussPoly:
    """p(u) * exp(-u^2 / (2 s2)), with ascending poly coefficients ``c``."""

    __slots__ = ("c", "s2")

    def __init__(self, c, s2: float = 1.0):
        c = np.atleast_1d(np.asarray(c, dtype=float))
        self.c = np.trim_zeros(c, "b") if c.any() else np.zeros(1)
        self.s2 = float(s2)
        if self.s2 <= 0:
            raise ValueError("Gaussian variance must be positive")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.polynomial.polynomial.polyval(u, self.c) * np.exp(
            -u * u / (2.0 * self.s2)
        )

    def __repr__(self):
        return f"GaussPoly(c={self.c!r}, s2={self.s2})"

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    def deriv(self) -> "GaussPoly":
        """d/du [p e^{-u^2/(2 s2)}] = (p' - u p / s2) e^{-u^2/(2 s2)}."""
        P = np.polynomial.polynomial
        q = P.polysub(P.polyder(self.c), P.polymul([0.0, 1.0 / self.s2], self.c))
        return GaussPoly(q, self.s2)

    def nderiv(self, k: int) -> "GaussPoly":
        g = self
        for _ in range(k):
            g = g.deriv()
        return g

    def mul(self, other: "GaussPoly") -> "GaussPoly":
        c = np.polynomial.polynomial.polymul(self.c, other.c)
        s2 = 1.0 / (1.0 / self.s2 + 1.0 / other.s2)
        return GaussPoly(c, s2)

    def scale_arg(self, a: float) -> "GaussPoly":
        """The function u -> self(a u) as a GaussPoly (a != 0)."""
        powers = np.asarray(a, dtype=float) ** np.arange(len(self.c))
        return GaussPoly(self.c * powers, self.s2 / (a * a))

    def moment(self, s: int = 0) -> float:
        """Exact integral of u^s * p(u) * exp(-u^2/(2 s2)) over the real line."""
        sig = np.sqrt(self.s2)
        total = 0.0
        for j, cj in enumerate(self.c):
            if cj == 0.0:
                continue
            m = s + j
            if m % 2 == 0:
                total += cj * _double_factorial(m - 1) * sig**m * SQRT_2PI * sig
        return total

    def integral(self) -> float:
        return self.moment(0)

    def convolve(self, other: "GaussPoly") -> "GaussPoly":
        """Exact convolution; the result is a GaussPoly with variance s2a + s2b.

        Writing the product of the two shifted Gaussians as the outer Gaussian
        in x times an inner Gaussian in v with mean mu(x) = x * s2a / S and
        variance s2a * s2b / S (S = s2a + s2b), the v-integral of the
        polynomial part reduces to even standard-normal moments.
        """
        a, b = self.s2, other.s2
        S = a + b
        si = np.sqrt(a * b / S)

        # coeff[k][j] tables of x^j for each w-power k, where v = mu + si*w
        def _expand(coeffs, lin_x, lin_w):
            # polynomial(sum_j c_j (lin_x*x + lin_w*w)^j) as {w-power: x-poly}
            table = {0: np.array([coeffs[0]])} if len(coeffs) else {}
            base = {0: np.array([1.0])}
            for j in range(1, len(coeffs)):
                nxt = {}
                for k, px in base.items():
                    nxt[k] = np.polynomial.polynomial.polyadd(
                        nxt.get(k, [0.0]), np.polynomial.polynomial.polymul(px, [0.0, lin_x])
                    )
                    nxt[k + 1] = np.polynomial.polynomial.polyadd(
                        nxt.get(k + 1, [0.0]), px * lin_w
                    )
                base = nxt
                if coeffs[j] != 0.0:
                    for k, px in base.items():
                        table[k] = np.polynomial.polynomial.polyadd(
                            table.get(k, [0.0]), px * coeffs[j]
                        )
            return table

        t1 = _expand(self.c, a / S, si)  # p1(v), v = (a/S) x + si w
        t2 = _expand(other.c, b / S, -si)  # p2(x - v) = p2((b/S) x - si w)
        out = np.zeros(1)
        P = np.polynomial.polynomial
        for k1, p1 in t1.items():
            for k2, p2 in t2.items():
                m = k1 + k2
                if m % 2 == 0:
                    w_int = _double_factorial(m - 1) * SQRT_2PI * si
                    out = P.polyadd(out, P.polymul(p1, p2) * w_int)
        return GaussPoly(out, S)
