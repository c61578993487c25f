"""NumPy fallback for the hot kernel sums (same contract as the Cython core).

Both backends evaluate polynomial-times-Gaussian kernels
    g(u) = polyval(c, u) * exp(-u^2 * inv2s2)
over all data points (point sums) or over all unordered pairs (pair sums).
Pair sums assume an even kernel: callers pass even polynomials, so the sign
of u within a pair is immaterial and data may be pre-sorted for the cutoff.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"

_BLOCK = 256


def _eval(u, coeffs, inv2s2):
    return np.polynomial.polynomial.polyval(u, coeffs) * np.exp(-u * u * inv2s2)


def point_sum(x, center, scale, coeffs, inv2s2, cutoff):
    """Sum of g((x_i - center)/scale) over all i."""
    u = (np.asarray(x, dtype=float) - center) / scale
    u = u[np.abs(u) <= cutoff]
    if u.size == 0:
        return 0.0
    return float(np.sum(_eval(u, coeffs, inv2s2)))


def pair_sum(x_sorted, scale, coeffs, inv2s2, cutoff):
    """Sum of g((x_i - x_j)/scale) over unordered pairs i < j (even g)."""
    x = np.asarray(x_sorted, dtype=float)
    n = x.size
    thr = cutoff * scale
    total = 0.0
    for i0 in range(0, n - 1, _BLOCK):
        i1 = min(i0 + _BLOCK, n - 1)
        xi = x[i0:i1, None]
        d = x[None, i0 + 1:] - xi  # columns j > i0
        cols = np.arange(i0 + 1, n)[None, :]
        rows = np.arange(i0, i1)[:, None]
        mask = (cols > rows) & (d <= thr) & (d >= -thr)
        u = d[mask] / scale
        if u.size:
            total += float(np.sum(_eval(u, coeffs, inv2s2)))
    return total
