"""Periodogram of detrended series, period estimation and harmonic count."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import find_peaks

from ..series import RegressionData

__all__ = [
    "Periodogram",
    "NoSignificantPeriod",
    "detrend",
    "periodogram",
    "estimate_period",
    "estimate_m",
    "SIGNIFICANCE",
]

SIGNIFICANCE = 5.0
GRID_POINTS = 4096
MAX_M = 8


class NoSignificantPeriod(RuntimeError):
    """The periodogram shows no clear peak; fall back to the linear fit."""

    def __init__(self, ratio, threshold):
        super().__init__(f"peak-to-median ratio {ratio:.3g} is below {threshold:g}")
        self.ratio = ratio
        self.threshold = threshold


@dataclass(frozen=True)
class Periodogram:
    """``I(t) = |sum_j exp(-i j t) y_j|^2 / (2 pi n)``, summed over series.

    ``freqs`` are per-sample angular frequencies in ``(0, pi]`` on a grid
    refined by zero padding; ``step`` is the x spacing of the samples, so a
    frequency ``t`` corresponds to ``mu = t / step`` in x units.
    """

    freqs: np.ndarray
    power: np.ndarray
    pad_factor: int
    series: np.ndarray
    step: float = 1.0

    @property
    def n(self) -> int:
        return self.series.shape[1]

    def power_at(self, t) -> np.ndarray:
        """Exact periodogram at arbitrary frequencies."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        j = np.arange(1, self.n + 1)
        phase = np.exp(-1j * np.outer(t, j))
        amp = phase @ self.series.T
        return np.sum(np.abs(amp) ** 2, axis=1) / (2 * math.pi * self.n)

    def x_frequencies(self) -> np.ndarray:
        return self.freqs / self.step


def detrend(data: RegressionData, J=None) -> np.ndarray:
    """Residuals of a separate straight-line fit for each index, rows ordered as ``J``.

    Dropped samples are set to zero after detrending.
    """
    J = data.J if J is None else tuple(J)
    out = np.zeros((len(J), data.n))
    for row, k in enumerate(J):
        m = data.mask[k]
        coef = np.polyfit(data.x[m], data.y[k][m], 1)
        out[row, m] = data.y[k][m] - np.polyval(coef, data.x[m])
    return out


def periodogram(residuals, pad_factor: int = 10, step: float = 1.0, normalize: bool | None = None) -> Periodogram:
    """Zero-padded periodogram of one or several residual series.

    Parameters
    ----------
    residuals : array_like, shape (n,) or (K, n)
        Detrended series; each is centred again here.
    pad_factor : int
        FFT length is ``pad_factor * n``.
    step : float
        Sample spacing in x, used to express frequencies in x units.
    normalize : bool, optional
        Scale each series to unit variance before summing powers; default is
        on when more than one series is given.
    """
    y = np.atleast_2d(np.asarray(residuals, dtype=float))
    n = y.shape[1]
    if n < 8:
        raise ValueError("periodogram needs at least 8 samples")
    if pad_factor < 1:
        raise ValueError("pad_factor must be at least 1")
    y = y - y.mean(axis=1, keepdims=True)
    if normalize is None:
        normalize = y.shape[0] > 1
    if normalize:
        sd = y.std(axis=1, keepdims=True)
        y = np.divide(y, sd, out=np.zeros_like(y), where=sd > 0)
    nfft = pad_factor * n
    spec = np.fft.rfft(y, n=nfft, axis=1)
    power = np.sum(np.abs(spec) ** 2, axis=0) / (2 * math.pi * n)
    freqs = 2 * math.pi * np.arange(power.size) / nfft
    # drop t = 0; the sum over j starting at 1 only changes the phase
    return Periodogram(freqs[1:], power[1:], int(pad_factor), y, float(step))


def _score(pg: Periodogram, mu_t, m):
    mu_t = np.atleast_1d(mu_t)
    harmonics = np.outer(mu_t, np.arange(1, m + 1)).ravel()
    return pg.power_at(harmonics).reshape(mu_t.size, m).sum(axis=1)


def estimate_period(
    pg: Periodogram,
    m: int = 4,
    threshold: float = SIGNIFICANCE,
    grid_points: int = GRID_POINTS,
    return_ratio: bool = False,
):
    """Period ``h0 = 2 pi / mu`` maximising ``sum_{j<=m} I(j mu)``.

    Candidate fundamentals cover periods from three sample steps up to half
    the sampled x range.  The best of ``grid_points`` candidates is refined
    by a golden-section search between its neighbours.  The peak is accepted
    when the maximal score is at least ``threshold`` times the median score
    over the candidates; otherwise :class:`NoSignificantPeriod` is raised.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    n = pg.n
    # per-sample frequency band: period in samples within [3, n/2]
    lo = 2 * math.pi / ((n - 1) / 2.0)
    hi = 2 * math.pi / 3.0
    grid = np.linspace(lo, hi, grid_points)
    score = _score(pg, grid, m)
    med = float(np.median(score))
    i = int(np.argmax(score))
    ratio = float(score[i] / med) if med > 0 else (math.inf if score[i] > 0 else 0.0)
    if not ratio >= threshold:
        raise NoSignificantPeriod(ratio, threshold)
    t_best = grid[i]
    if 0 < i < grid_points - 1:
        res = minimize_scalar(
            lambda t: -_score(pg, t, m)[0],
            bracket=(grid[i - 1], grid[i], grid[i + 1]),
            method="golden",
            options={"xtol": 1e-10},
        )
        if res.success and grid[i - 1] <= res.x <= grid[i + 1] and -res.fun >= score[i]:
            t_best = float(res.x)
    h0 = 2 * math.pi * pg.step / t_best
    return (h0, ratio) if return_ratio else h0


def estimate_m(pg: Periodogram, factor: float = 5.0, rel_floor: float = 0.1, cap: int = MAX_M) -> int:
    """Number of harmonics from the count of high periodogram peaks.

    A peak is a local maximum above ``factor`` times the median power and
    above ``rel_floor`` times the largest power (the latter keeps side lobes
    of a dominant peak out).  Counting each positive-frequency peak with its
    mirror and the zero-frequency peak gives ``l = 2 l_+ + 1`` and the
    estimate ``floor((l - 1) / 2) = l_+``, clipped to ``[1, cap]``.
    """
    p = pg.power
    if not np.any(p > 0):
        return 1
    height = max(factor * float(np.median(p)), rel_floor * float(p.max()))
    peaks, _ = find_peaks(p, height=height, distance=max(1, 2 * pg.pad_factor))
    l = 2 * len(peaks) + 1
    return int(min(cap, max(1, (l - 1) // 2)))
