"""Fractal curvature measures of self-similar sets from pixel images."""

import os

import numba

# the TBB layer is often unavailable; OpenMP is always shipped with numba
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "omp"

__version__ = "0.1.0"
