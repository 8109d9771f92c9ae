"""Least-squares estimators of the dimension and the fractal curvatures.

Model for every index ``k`` in ``J``::

    y_kj = beta_k + s * x_j + f_k(x_j) + error

with ``f_k = 0`` for the linear estimator (LRE) and a trigonometric
polynomial of period ``h0`` for the seasonal estimator (NRE)::

    f_k(x) = sum_{i=1..m} alpha_ki cos(i mu x) - gamma_ki sin(i mu x),
    mu = 2 pi / h0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import qr, solve_triangular

from ..series import RegressionData

__all__ = [
    "LreResult",
    "NreResult",
    "DegenerateDesign",
    "lre_fit",
    "nre_fit",
    "per_index_slopes",
    "check_halfdim_relation",
    "seasonal_curvature",
    "SIMPSON_PANELS",
]

SIMPSON_PANELS = 1024
RANK_RTOL = 1e-10


class DegenerateDesign(ValueError):
    """The design matrix does not have full column rank."""


@dataclass(frozen=True)
class LreResult:
    s_hat: float
    beta: dict
    curvatures: dict
    residual: float
    J: tuple
    n: int
    s_known: bool = False

    def curvature(self, k):
        return self.curvatures[k]


@dataclass(frozen=True)
class NreResult:
    s_hat: float
    beta: dict
    alpha: dict
    gamma: dict
    h0: float
    m: int
    curvatures: dict
    residual: float
    J: tuple
    n: int
    mode: str = "simultaneous"
    s_by_k: dict = field(default_factory=dict)
    s_known: bool = False

    @property
    def amplitude(self) -> dict:
        return {k: np.hypot(self.alpha[k], self.gamma[k]) for k in self.J}

    @property
    def phase(self) -> dict:
        return {k: np.arctan2(self.gamma[k], self.alpha[k]) for k in self.J}

    def seasonal(self, k, x):
        return _seasonal(np.asarray(x, dtype=float), self.alpha[k], self.gamma[k], 2 * math.pi / self.h0)


def _signed(k, absval, signs):
    sgn = signs[k] if signs[k] != 0 else 1
    return sgn * absval


def _rows(data: RegressionData):
    """Stacked (k, x, y) triples over the usable samples of every k in J."""
    ks, xs, ys = [], [], []
    for k in data.J:
        m = data.mask[k]
        ks.append(np.full(m.sum(), k))
        xs.append(data.x[m])
        ys.append(data.y[k][m])
    return np.concatenate(ks), np.concatenate(xs), np.concatenate(ys)


def lre_fit(data: RegressionData, s: float | None = None) -> LreResult:
    """Common-slope linear fit over the indices in ``data.J``.

    Uses the closed form ``s = sum_k sum_j y_kj (x_j - xbar) / ((n-1) |J| S^2)``
    and ``beta_k = ybar_k - xbar s`` when every sample is present; with
    dropped samples the same objective is minimised by a general least-squares
    solve.  Passing ``s`` fixes the slope and estimates the intercepts only.

    With ``J = (2,)`` this is the classical sausage method.
    """
    x = data.x
    n = x.size
    J = data.J
    if s is None and (n < 2 or np.ptp(x) == 0):
        raise DegenerateDesign("all x values are equal")
    if data.complete():
        xbar = x.mean()
        if s is None:
            dx = x - xbar
            sxx = float(dx @ dx)
            s_hat = sum(float(data.y[k] @ dx) for k in J) / (len(J) * sxx)
        else:
            s_hat = float(s)
        beta = {k: float(data.y[k].mean() - xbar * s_hat) for k in J}
    else:
        kk, xx, yy = _rows(data)
        cols = [(kk == k).astype(float) for k in J]
        if s is None:
            cols.append(xx)
        else:
            yy = yy - s * xx
        X = np.column_stack(cols)
        coef, *_ = np.linalg.lstsq(X, yy, rcond=None)
        if np.linalg.matrix_rank(X) < X.shape[1]:
            raise DegenerateDesign("design matrix is rank deficient")
        beta = {k: float(coef[i]) for i, k in enumerate(J)}
        s_hat = float(coef[-1]) if s is None else float(s)
    resid = 0.0
    for k in J:
        m = data.mask[k]
        r = data.y[k][m] - beta[k] - s_hat * x[m]
        resid += float(r @ r)
    curv = {k: _signed(k, math.exp(beta[k]), data.signs) for k in J}
    return LreResult(s_hat, beta, curv, resid, J, n, s_known=s is not None)


def per_index_slopes(data: RegressionData) -> dict:
    """Separate linear fit for every index; comparing them tests ``s_k = s``."""
    out = {}
    for k in data.J:
        out[k] = lre_fit(data.restrict((k,))).s_hat
    return out


# ---------------------------------------------------------------------------
# seasonal model


def _seasonal(x, alpha, gamma, mu):
    f = np.zeros_like(x, dtype=float)
    for i, (a, g) in enumerate(zip(alpha, gamma), 1):
        f += a * np.cos(i * mu * x) - g * np.sin(i * mu * x)
    return f


def seasonal_curvature(beta: float, alpha, gamma, h0: float, panels: int = SIMPSON_PANELS) -> float:
    """``exp(beta) / h0 * integral_0^h0 exp(f(x)) dx`` by composite Simpson."""
    mu = 2 * math.pi / h0
    grid = np.linspace(0.0, h0, panels + 1)
    val = math.exp(beta) * simpson(np.exp(_seasonal(grid, alpha, gamma, mu)), x=grid) / h0
    if not math.isfinite(val):
        raise FloatingPointError("curvature integral is not finite")
    return val


def _check_resonance(x, h0, m):
    """Reject equally spaced x when a harmonic aliases onto the constant."""
    d = np.diff(x)
    if d.size == 0 or not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        return
    a = abs(d[0])
    for j in range(1, 2 * m + 1):
        q = a * j / h0
        if abs(q - round(q)) < 1e-9:
            raise DegenerateDesign(
                f"step {a:g} times {j} is a multiple of the period {h0:g}; "
                "the seasonal columns are collinear with the intercept"
            )


def _qr_solve(X, y):
    Q, R, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size and diag[-1] <= RANK_RTOL * diag[0]:
        raise DegenerateDesign("design matrix is rank deficient")
    z = solve_triangular(R, Q.T @ y)
    coef = np.empty_like(z)
    coef[piv] = z
    return coef


def _fit_block(data, J, h0, m, s):
    kk, xx, yy = _rows(data.restrict(J))
    mu = 2 * math.pi / h0
    cols = []
    for k in J:
        cols.append((kk == k).astype(float))
    if s is None:
        cols.append(xx)
    else:
        yy = yy - s * xx
    for k in J:
        sel = (kk == k).astype(float)
        for i in range(1, m + 1):
            cols.append(sel * np.cos(i * mu * xx))
            cols.append(-sel * np.sin(i * mu * xx))
    X = np.column_stack(cols)
    if X.shape[0] < X.shape[1]:
        raise DegenerateDesign("fewer samples than parameters")
    coef = _qr_solve(X, yy)
    nJ = len(J)
    beta = {k: float(coef[i]) for i, k in enumerate(J)}
    s_hat = float(coef[nJ]) if s is None else float(s)
    off = nJ + (1 if s is None else 0)
    alpha, gamma = {}, {}
    for i, k in enumerate(J):
        block = coef[off + 2 * m * i : off + 2 * m * (i + 1)]
        alpha[k] = block[0::2].copy()
        gamma[k] = block[1::2].copy()
    r = yy - X @ coef
    return s_hat, beta, alpha, gamma, float(r @ r)


def nre_fit(
    data: RegressionData,
    h0: float,
    m: int = 4,
    mode: str = "simultaneous",
    s: float | None = None,
    panels: int = SIMPSON_PANELS,
) -> NreResult:
    """Linear fit with a Fourier seasonal part of known period ``h0``.

    Parameters
    ----------
    data : RegressionData
    h0 : float
        Period of the seasonal part in x units (``log 2`` for the gasket).
    m : int
        Number of harmonics; ``m = 0`` reduces to :func:`lre_fit`.
    mode : {"simultaneous", "separate"}
        ``simultaneous`` shares the slope across indices.  ``separate`` fits
        each index on its own and reports the median of the per-index slopes.
    s : float, optional
        Known dimension; only intercepts and seasonal terms are fitted.
    panels : int
        Simpson panels for the curvature integral.

    Returns
    -------
    NreResult
        Curvatures are ``sign_k * exp(beta_k) / h0 * int_0^h0 exp(f_k)``.
    """
    if h0 <= 0 or not math.isfinite(h0):
        raise ValueError("period h0 must be positive")
    if m < 0:
        raise ValueError("m must be non-negative")
    if mode not in ("simultaneous", "separate"):
        raise ValueError(f"unknown mode {mode!r}")
    n = data.n
    if n < 2 * m + 2:
        raise DegenerateDesign(f"need at least {2 * m + 2} samples for m={m}")
    _check_resonance(data.x, h0, m)
    J = data.J
    if mode == "simultaneous":
        s_hat, beta, alpha, gamma, resid = _fit_block(data, J, h0, m, s)
        s_by_k = {}
    else:
        beta, alpha, gamma, s_by_k = {}, {}, {}, {}
        resid = 0.0
        for k in J:
            sk, b, a, g, r = _fit_block(data, (k,), h0, m, s)
            s_by_k[k] = sk
            beta[k], alpha[k], gamma[k] = b[k], a[k], g[k]
            resid += r
        s_hat = float(np.median(list(s_by_k.values())))
    curv = {
        k: _signed(k, seasonal_curvature(beta[k], alpha[k], gamma[k], h0, panels), data.signs) for k in J
    }
    return NreResult(
        s_hat=s_hat,
        beta=beta,
        alpha=alpha,
        gamma=gamma,
        h0=float(h0),
        m=int(m),
        curvatures=curv,
        residual=resid,
        J=J,
        n=n,
        mode=mode,
        s_by_k=s_by_k,
        s_known=s is not None,
    )


def check_halfdim_relation(result, d: int = 2) -> float:
    """Relative gap ``|C1 - (d - s)/2 * C2| / |C1|`` between fitted curvatures."""
    curv = result.curvatures
    if 1 not in curv or 2 not in curv:
        raise KeyError("relation needs curvatures for k = 1 and k = 2")
    c1, c2 = curv[1], curv[2]
    if c1 == 0:
        raise ZeroDivisionError("C1 estimate is zero")
    return abs(c1 - (d - result.s_hat) / 2.0 * c2) / abs(c1)
