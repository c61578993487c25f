"""Hot-path kernel sums: compiled extension if available, NumPy otherwise.

``BACKEND`` reports which implementation was selected at import time.
``scripts/bench_backends.py`` compares the two.
"""

try:
    from ._fastsums import BACKEND, pair_sum, point_sum
except ImportError:  # extension not built; fall back to NumPy
    from .fastsums_py import BACKEND, pair_sum, point_sum

from . import fastsums_py

__all__ = ["BACKEND", "pair_sum", "point_sum", "fastsums_py"]
