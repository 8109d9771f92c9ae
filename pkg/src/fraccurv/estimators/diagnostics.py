"""Closed-form spectrum of the stacked linear design and the resulting error bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["DesignEigen", "design_eigen", "design_matrix", "exceedance_bound"]


@dataclass(frozen=True)
class DesignEigen:
    """Eigenvalues of ``X^T X`` for ``d + 1`` indices sharing one slope.

    ``lam0 = n`` has multiplicity ``d``; ``lam1 >= lam2`` are the roots of
    ``lam^2 - (n + v) lam + n^2 (d+1) S^2`` with ``v = (d+1) sum x^2`` and
    ``S^2`` the (biased) sample variance of ``x``.
    """

    n: int
    d: int
    lam0: float
    lam1: float
    lam2: float
    trace: float

    @property
    def lam_min(self) -> float:
        return min(self.lam0, self.lam2)

    def values(self) -> np.ndarray:
        return np.sort(np.array([self.lam0] * self.d + [self.lam1, self.lam2]))


def design_matrix(x, d: int = 2) -> np.ndarray:
    """Explicit ``(d+1) n x (d+2)`` matrix: one intercept column per index, then x."""
    x = np.asarray(x, dtype=float)
    n = x.size
    X = np.zeros(((d + 1) * n, d + 2))
    for k in range(d + 1):
        X[k * n : (k + 1) * n, k] = 1.0
        X[k * n : (k + 1) * n, d + 1] = x
    return X


def design_eigen(x, d: int = 2) -> DesignEigen:
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples")
    v = (d + 1) * float(x @ x)
    s2 = float(np.mean((x - x.mean()) ** 2))
    half = (n + v) / 2.0
    prod = n * n * (d + 1) * s2
    disc = math.sqrt(max(half * half - prod, 0.0))
    lam1 = half + disc
    # the small root from the product avoids cancellation
    lam2 = prod / lam1 if lam1 > 0 else 0.0
    return DesignEigen(n, d, float(n), lam1, lam2, n * (d + 1) + v)


def exceedance_bound(eig: DesignEigen, nu_star: float, eps: float) -> float:
    """Chebyshev-type bound ``nu* / eps^2 * tr(X^T X) / lam_min^2`` on ``P(|beta_hat - beta| > eps)``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return nu_star / eps**2 * eig.trace / eig.lam_min**2
