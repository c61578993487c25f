"""Deterministic quadrature, bracketed root finding, and seedable RNG streams.

Integrands are expected to accept NumPy arrays of abscissae; the adaptive
Simpson driver batches all pending midpoint evaluations per refinement sweep,
and the final reduction sums subinterval contributions in left-to-right order
so results do not depend on refinement scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureSpec",
    "IntegrationError",
    "integrate",
    "integrate2d",
    "find_root",
    "RngStream",
    "generator",
    "standard_normal_draws",
]


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = "adaptive-simpson"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_depth: int = 48

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.scheme not in ("adaptive-simpson", "tensor-product-2d"):
            raise ValueError(f"unknown quadrature scheme: {self.scheme}")


DEFAULT_QUAD = QuadratureSpec()
DEFAULT_QUAD_2D = QuadratureSpec(scheme="tensor-product-2d", abs_tol=1e-8, rel_tol=1e-8)


class IntegrationError(RuntimeError):
    """Raised when refinement hits max_depth; carries the best estimate."""

    def __init__(self, message, estimate, error_bound):
        super().__init__(f"{message} (best estimate {estimate:.12g}, "
                         f"error bound {error_bound:.3g})")
        self.estimate = estimate
        self.error_bound = error_bound


def _simpson(fa, fm, fb, width):
    return width / 6.0 * (fa + 4.0 * fm + fb)


def integrate(f, lo: float, hi: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Adaptive Simpson integral of f over [lo, hi].

    The local acceptance test distributes max(abs_tol, rel_tol*|I|) over
    subintervals proportionally to width; accepted panels use the standard
    /15 Richardson correction.
    """
    if not lo < hi:
        raise ValueError("integration requires lo < hi")
    lo, hi = float(lo), float(hi)
    total_width = hi - lo

    a = np.array([lo])
    b = np.array([hi])
    fa = np.asarray(f(a), dtype=float)
    fb = np.asarray(f(b), dtype=float)
    fm = np.asarray(f((a + b) / 2.0), dtype=float)
    if not (np.isfinite(fa).all() and np.isfinite(fb).all() and np.isfinite(fm).all()):
        raise ValueError("integrand not finite on the integration interval")
    S = _simpson(fa, fm, fb, b - a)

    accepted = []  # (left endpoint, contribution)
    rough = float(np.sum(S))
    for depth in range(spec.max_depth + 1):
        lm = (a + (a + b) / 2.0) / 2.0
        rm = ((a + b) / 2.0 + b) / 2.0
        flm = np.asarray(f(lm), dtype=float)
        frm = np.asarray(f(rm), dtype=float)
        half = (b - a) / 2.0
        Sl = _simpson(fa, flm, fm, half)
        Sr = _simpson(fm, frm, fb, half)
        err = Sl + Sr - S
        scale = max(spec.abs_tol, spec.rel_tol * abs(rough))
        tol = scale * (b - a) / total_width
        aerr = np.abs(err)
        # stop refining once the error estimate sits at double-precision noise
        noise = 1e-13 * (np.abs(Sl) + np.abs(Sr) + np.abs(S)) + 1e-300
        ok = (aerr <= 15.0 * tol) | (aerr <= noise)
        if depth == spec.max_depth and not ok.all():
            residual = float(np.sum(aerr[~ok]))
            for ai, contrib in zip(a, Sl + Sr + err / 15.0):
                accepted.append((ai, contrib))
            best = float(sum(c for _, c in sorted(accepted, key=lambda t: t[0])))
            if residual > scale:
                raise IntegrationError("adaptive Simpson did not converge",
                                       best, residual)
            return best
        for ai, contrib in zip(a[ok], (Sl + Sr + err / 15.0)[ok]):
            accepted.append((ai, contrib))
        if ok.all():
            break
        keep = ~ok
        mid = (a[keep] + b[keep]) / 2.0
        a = np.concatenate([a[keep], mid])
        b = np.concatenate([mid, b[keep]])
        fa = np.concatenate([fa[keep], fm[keep]])
        fb = np.concatenate([fm[keep], fb[keep]])
        fm = np.concatenate([flm[keep], frm[keep]])
        S = np.concatenate([Sl[keep], Sr[keep]])
        rough = float(sum(c for _, c in accepted)) + float(np.sum(S))
    accepted.sort(key=lambda t: t[0])
    return float(sum(c for _, c in accepted))


def integrate2d(f, box, spec: QuadratureSpec = DEFAULT_QUAD_2D) -> float:
    """Tensor-product integral of f(x, y) over box = ((xlo, xhi), (ylo, yhi)).

    Outer adaptive Simpson in x; each outer evaluation is itself an adaptive
    1D integral in y at a tightened tolerance.
    """
    (xlo, xhi), (ylo, yhi) = box
    inner_spec = QuadratureSpec(
        "adaptive-simpson", spec.abs_tol / 4.0, spec.rel_tol / 4.0, spec.max_depth
    )

    def outer(xs):
        xs = np.atleast_1d(xs)
        out = np.empty_like(xs, dtype=float)
        for i, xv in enumerate(xs):
            out[i] = integrate(lambda ys: f(xv, ys), ylo, yhi, inner_spec)
        return out

    outer_spec = QuadratureSpec("adaptive-simpson", spec.abs_tol, spec.rel_tol,
                                spec.max_depth)
    return integrate(outer, xlo, xhi, outer_spec)


def find_root(g, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Bisection on a bracket with a sign change; |g(z)| <= tol also accepts."""
    glo = float(g(lo))
    ghi = float(g(hi))
    if glo == 0.0:
        return float(lo)
    if ghi == 0.0:
        return float(hi)
    if glo * ghi > 0.0:
        raise ValueError(f"no sign change on bracket [{lo}, {hi}]")
    a, b, ga = float(lo), float(hi), glo
    while b - a > tol:
        m = 0.5 * (a + b)
        gm = float(g(m))
        if abs(gm) <= tol:
            return m
        if ga * gm <= 0.0:
            b = m
        else:
            a, ga = m, gm
    return 0.5 * (a + b)


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream descriptor; (seed, stream_id) fixes the sequence."""

    seed: int
    stream_id: int = 0

    def substream(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


def generator(stream: RngStream) -> np.random.Generator:
    key = np.array(
        [np.uint64(stream.seed & 0xFFFFFFFFFFFFFFFF),
         np.uint64(stream.stream_id & 0xFFFFFFFFFFFFFFFF)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def standard_normal_draws(stream: RngStream, count: int) -> np.ndarray:
    if count < 0:
        raise ValueError("count must be >= 0")
    return generator(stream).standard_normal(count)
