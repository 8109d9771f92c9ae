"""Monte Carlo checks of the linear estimator on synthetic regressions.

Data follow ``y_kj = beta_k + s x_j + delta_kj`` for ``k = 0..d`` with errors
``delta_k = sqrt(Q) gamma_k`` (independent across ``k``), where ``gamma_k``
has independent standardised entries.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .estimators.diagnostics import design_eigen, design_matrix, exceedance_bound
from .series import LogArithmetic, Power

__all__ = [
    "Iid",
    "MovingAverage",
    "ExplicitCovariance",
    "TrialReport",
    "NormalityReport",
    "schedule_x",
    "generate_errors",
    "simulate_lre",
    "simulate_normality",
    "parse_error_model",
    "MIN_TRIALS",
]

MIN_TRIALS = 100


@dataclass(frozen=True)
class Iid:
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    def covariance(self, n):
        return self.sigma**2 * np.eye(n)


@dataclass(frozen=True)
class MovingAverage:
    """Finite-range dependence: ``delta_j = sigma * sum_{i<w} c_i gamma_{j-i}``.

    Weights ``c_i`` are proportional to ``rho**i`` and scaled to unit sum of
    squares.  Geometric weights keep the spectral density bounded away from
    zero, so the eigenvalues of ``Q`` stay in a fixed positive band.
    """

    sigma: float
    window: int = 5
    rho: float = 0.5

    def __post_init__(self):
        if self.sigma < 0 or self.window < 1 or not 0 <= self.rho < 1:
            raise ValueError("invalid moving-average parameters")

    def weights(self):
        c = self.rho ** np.arange(self.window)
        return c / np.sqrt(c @ c)

    def covariance(self, n):
        c = self.weights()
        acf = np.array([c[: self.window - h] @ c[h:] for h in range(self.window)])
        Q = np.zeros((n, n))
        for h, v in enumerate(acf):
            if h < n:
                Q += v * (np.eye(n, k=h) + (np.eye(n, k=-h) if h else 0))
        return self.sigma**2 * Q


@dataclass(frozen=True)
class ExplicitCovariance:
    Q: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("covariance must be a square matrix")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        if np.linalg.eigvalsh(Q).min() <= 0:
            raise ValueError("covariance must be positive definite")
        object.__setattr__(self, "Q", Q)

    def covariance(self, n):
        if n != self.Q.shape[0]:
            raise ValueError(f"covariance has size {self.Q.shape[0]}, need {n}")
        return self.Q


def schedule_x(family, n: int) -> np.ndarray:
    """x values of a schedule family for sample size ``n``."""
    if isinstance(family, Power):
        return Power(family.c, family.delta, n).x_values()
    if isinstance(family, LogArithmetic):
        return LogArithmetic(family.a0, family.a, n).x_values()
    if callable(family):
        return np.asarray(family(n), dtype=float)
    raise TypeError("schedule family must be Power, LogArithmetic or a callable n -> x")


def _rng(seed, n, trial):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(n), int(trial)]))


def _innovations(rng, shape, kind):
    if kind == "normal":
        return rng.standard_normal(shape)
    if kind == "t3":
        # unit variance: Var(t_3) = 3
        return rng.standard_t(3, size=shape) / math.sqrt(3.0)
    raise ValueError(f"unknown innovation law {kind!r}")


def generate_errors(model, n: int, trials: int, rows: int = 3, seed: int = 0, innovations: str = "normal") -> np.ndarray:
    """Error arrays of shape ``(trials, rows, n)``; trial ``i`` uses its own seeded stream."""
    gam = np.stack([_innovations(_rng(seed, n, i), (rows, n), innovations) for i in range(trials)])
    if isinstance(model, Iid):
        return model.sigma * gam
    L = np.linalg.cholesky(model.covariance(n))
    return gam @ L.T


def _fit_many(x, Y):
    """Closed-form common-slope fit for a stack ``Y`` of shape (trials, rows, n)."""
    xbar = x.mean()
    dx = x - xbar
    s = np.einsum("trn,n->t", Y, dx) / (Y.shape[1] * (dx @ dx))
    beta = Y.mean(axis=2) - xbar * s[:, None]
    return s, beta


@dataclass
class TrialReport:
    n_values: list
    rmse_s: list
    rmse_beta: list
    eps: list
    exceed_freq: list
    bound: list
    trials: int
    nu_star: list = field(default_factory=list)

    @property
    def exceedance_monotone(self) -> bool:
        """Exceedance frequencies are non-increasing in n for every eps."""
        f = np.asarray(self.exceed_freq)
        return bool(np.all(np.diff(f, axis=0) <= 0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        k = len(self.rmse_beta[0])
        head = ["n", "rmse_s"] + [f"rmse_beta_{i}" for i in range(k)]
        for e in self.eps:
            head += [f"exceed_freq({e:g})", f"bound({e:g})"]
        w.writerow(head)
        for i, n in enumerate(self.n_values):
            row = [n, "%.17g" % self.rmse_s[i]] + ["%.17g" % v for v in self.rmse_beta[i]]
            for j in range(len(self.eps)):
                row += ["%.17g" % self.exceed_freq[i][j], "%.17g" % self.bound[i][j]]
            w.writerow(row)
        return buf.getvalue()


def simulate_lre(
    beta=(-1.0, 0.5, 2.0),
    s: float = 1.5,
    family=Power(1.0, 0.4),
    error=Iid(0.1),
    n_values=(50, 100, 200, 400),
    trials: int = 500,
    eps=(0.05, 0.1),
    seed: int = 0,
) -> TrialReport:
    """RMSE and exceedance frequencies of the linear estimator across sample sizes.

    Exceedance refers to the Euclidean error of the full parameter vector
    ``(beta_0, ..., beta_d, s)``; its bound is the Chebyshev-type bound built
    from the closed-form design spectrum with ``nu*`` the largest eigenvalue
    of ``Q``.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials")
    beta = np.asarray(beta, dtype=float)
    rows = beta.size
    out = TrialReport(list(n_values), [], [], list(eps), [], [], trials)
    for n in n_values:
        x = schedule_x(family, n)
        Q = error.covariance(n)
        nu = float(np.linalg.eigvalsh(Q).max())
        Y = beta[None, :, None] + s * x[None, None, :] + generate_errors(error, n, trials, rows, seed)
        s_hat, b_hat = _fit_many(x, Y)
        err = np.sqrt(np.sum((b_hat - beta) ** 2, axis=1) + (s_hat - s) ** 2)
        eig = design_eigen(x, d=rows - 1)
        out.rmse_s.append(float(np.sqrt(np.mean((s_hat - s) ** 2))))
        out.rmse_beta.append([float(v) for v in np.sqrt(np.mean((b_hat - beta) ** 2, axis=0))])
        out.exceed_freq.append([float(np.mean(err > e)) for e in eps])
        out.bound.append([exceedance_bound(eig, nu, e) for e in eps])
        out.nu_star.append(nu)
    return out


@dataclass
class NormalityReport:
    n: int
    trials: int
    statistic: np.ndarray
    deciles: np.ndarray
    normal_deciles: np.ndarray
    ks_stat: float
    ks_pvalue: float

    @property
    def max_decile_gap(self) -> float:
        return float(np.max(np.abs(self.deciles - self.normal_deciles)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantile", "empirical", "normal"])
        for q, e, z in zip(np.arange(1, 10) / 10, self.deciles, self.normal_deciles):
            w.writerow(["%.1f" % q, "%.17g" % e, "%.17g" % z])
        w.writerow(["ks_stat", "%.17g" % self.ks_stat, ""])
        w.writerow(["ks_pvalue", "%.17g" % self.ks_pvalue, ""])
        return buf.getvalue()


def simulate_normality(
    beta=(-1.0, 0.5, 2.0),
    s: float = 1.5,
    family=Power(1.0, 0.4),
    sigma: float = 0.1,
    n: int = 1000,
    trials: int = 2000,
    t_vector=None,
    seed: int = 0,
    innovations: str = "normal",
) -> NormalityReport:
    """Distribution of ``t'(theta_hat - theta) / (sigma sqrt(t' (X'X)^-1 t))``.

    ``theta = (beta_0, ..., beta_d, s)``; the default ``t`` picks ``beta_0``.
    With ``sigma = 0`` the statistic is identically zero.
    """
    beta = np.asarray(beta, dtype=float)
    rows = beta.size
    t = np.zeros(rows + 1) if t_vector is None else np.asarray(t_vector, dtype=float)
    if t_vector is None:
        t[0] = 1.0
    if t.size != rows + 1:
        raise ValueError(f"t_vector needs {rows + 1} entries")
    x = schedule_x(family, n)
    X = design_matrix(x, d=rows - 1)
    scale = math.sqrt(float(t @ np.linalg.solve(X.T @ X, t)))
    Y = beta[None, :, None] + s * x[None, None, :]
    if sigma > 0:
        Y = Y + generate_errors(Iid(sigma), n, trials, rows, seed, innovations)
    else:
        Y = np.broadcast_to(Y, (trials, rows, n))
    s_hat, b_hat = _fit_many(x, Y)
    theta_err = np.column_stack([b_hat - beta, s_hat - s])
    if sigma > 0:
        z = theta_err @ t / (sigma * scale)
    else:
        z = np.zeros(trials)
    probs = np.arange(1, 10) / 10
    ks = stats.kstest(z, "norm") if sigma > 0 else stats.kstest(np.zeros(2), "norm")
    return NormalityReport(n, trials, z, np.quantile(z, probs), stats.norm.ppf(probs), float(ks.statistic), float(ks.pvalue))


def parse_error_model(text: str):
    """``iid:SIGMA``, ``ma:SIGMA[:WINDOW[:RHO]]`` or ``cov:PATH`` (whitespace separated matrix)."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    parts = [p for p in rest.split(":") if p]
    try:
        if kind == "iid":
            (sigma,) = parts
            return Iid(float(sigma))
        if kind == "ma":
            sigma = float(parts[0])
            window = int(parts[1]) if len(parts) > 1 else 5
            rho = float(parts[2]) if len(parts) > 2 else 0.5
            return MovingAverage(sigma, window, rho)
        if kind == "cov":
            return ExplicitCovariance(np.loadtxt(rest, ndmin=2))
    except (ValueError, IndexError, OSError) as exc:
        raise ValueError(f"invalid error model {text!r}: {exc}") from exc
    raise ValueError(f"unknown error model {text!r}")
