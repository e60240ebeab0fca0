"""Numerical tolerances and resource caps shared across the package."""

from __future__ import annotations

import os

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-9
EIGEN_RESIDUAL_TOL = 1e-9
DEGENERACY_TOL = 1e-9
NORM_DRIFT_TOL = 1e-9

# energy unit; all times are reported in units of 1/OMEGA0
OMEGA0 = 1.0

# dense operators above this dimension are refused (override with QUTRITCD_MAX_DENSE_DIM)
DEFAULT_MAX_DENSE_DIM = 4096
# diagonal-only work (brute force oracle) is allowed up to 4**12 basis states
DEFAULT_MAX_DIAGONAL_DIM = 4**12


def max_dense_dim() -> int:
    return int(os.environ.get("QUTRITCD_MAX_DENSE_DIM", DEFAULT_MAX_DENSE_DIM))


def max_diagonal_dim() -> int:
    return int(os.environ.get("QUTRITCD_MAX_DIAGONAL_DIM", DEFAULT_MAX_DIAGONAL_DIM))


def degeneracy_window(ground_energy: float) -> float:
    return DEGENERACY_TOL * max(1.0, abs(ground_energy))
