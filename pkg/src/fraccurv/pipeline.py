"""End-to-end analysis of a curvature series: method choice, fits and report."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .estimators import (
    LreResult,
    NoSignificantPeriod,
    NreResult,
    check_halfdim_relation,
    detrend,
    estimate_m,
    estimate_period,
    lre_fit,
    nre_fit,
    per_index_slopes,
    periodogram,
)
from .estimators.spectral import SIGNIFICANCE
from .series import CurvatureSeries, RegressionData, to_regression, validate_signs

__all__ = ["Analysis", "analyze", "sample_step", "period_from_data", "format_report", "write_result_csv"]


@dataclass
class Analysis:
    data: RegressionData
    lre: LreResult
    nre: NreResult | None = None
    method: str = "lre"
    h0: float | None = None
    h0_estimated: bool = False
    peak_ratio: float | None = None
    m_hat: int | None = None
    slopes: dict = field(default_factory=dict)
    relation: float | None = None
    box_dimension: float | None = None
    notes: list = field(default_factory=list)

    @property
    def chosen(self):
        return self.nre if self.method == "nre" else self.lre

    @property
    def s_hat(self) -> float:
        return self.chosen.s_hat


def sample_step(x) -> float:
    """Common spacing of ``x``; warns when the samples are not equally spaced."""
    d = np.diff(np.asarray(x, dtype=float))
    step = float(np.median(d))
    if not np.allclose(d, step, rtol=1e-6, atol=0.0):
        warnings.warn("x is not equally spaced; the periodogram treats samples as equidistant", stacklevel=2)
    return step


def period_from_data(data: RegressionData, m: int, index=(0,), pad: int = 10, threshold: float = SIGNIFICANCE):
    """Estimate ``h0`` from detrended residuals of the given indices.

    Returns ``(h0, peak_ratio, m_hat, periodogram)``; raises
    :class:`NoSignificantPeriod` when no clear peak is present.
    """
    idx = tuple(k for k in index if k in data.J) or data.J
    pg = periodogram(detrend(data, idx), pad_factor=pad, step=sample_step(data.x))
    m_hat = estimate_m(pg)
    h0, ratio = estimate_period(pg, m, threshold=threshold, return_ratio=True)
    return h0, ratio, m_hat, pg


def analyze(
    series: CurvatureSeries | RegressionData,
    method: str = "auto",
    J=None,
    m: int = 4,
    h0: float | None = None,
    s: float | None = None,
    mode: str = "simultaneous",
    period_index=(0,),
    pad: int = 10,
    threshold: float = SIGNIFICANCE,
) -> Analysis:
    """Fit a series with the linear and, where appropriate, the seasonal model.

    ``method='auto'`` uses the seasonal fit when a period is known or the
    periodogram shows a significant peak, and the linear fit otherwise.
    ``method='nre'`` without ``h0`` propagates :class:`NoSignificantPeriod`.
    """
    if method not in ("auto", "lre", "nre"):
        raise ValueError(f"unknown method {method!r}")
    if isinstance(series, RegressionData):
        data = series if J is None else series.restrict(J)
    else:
        if series.signs is None:
            series = validate_signs(series)
        data = to_regression(series, J)
    out = Analysis(data=data, lre=lre_fit(data, s=s))
    out.slopes = per_index_slopes(data) if data.n >= 2 and np.ptp(data.x) > 0 else {}
    if method != "lre":
        if h0 is None:
            try:
                h0, out.peak_ratio, out.m_hat, _ = period_from_data(data, max(m, 1), period_index, pad, threshold)
                out.h0_estimated = True
            except NoSignificantPeriod as exc:
                if method == "nre":
                    raise
                out.notes.append(f"no significant period ({exc}); using the linear fit")
        if h0 is not None:
            out.h0 = float(h0)
            out.nre = nre_fit(data, h0, m, mode=mode, s=s)
            out.method = "nre"
    if 1 in data.J and 2 in data.J:
        try:
            out.relation = check_halfdim_relation(out.chosen)
        except ZeroDivisionError:
            out.relation = math.inf
    return out


def _g(v):
    return "%.17g" % v


def write_result_csv(res: Analysis, path_or_buf) -> None:
    """Long-format CSV: ``method, quantity, k, value``."""
    rows = []
    for name, fit in (("lre", res.lre), ("nre", res.nre)):
        if fit is None:
            continue
        rows.append((name, "s_hat", "", _g(fit.s_hat)))
        rows.append((name, "residual", "", _g(fit.residual)))
        for k in fit.J:
            rows.append((name, "beta", k, _g(fit.beta[k])))
            rows.append((name, "curvature", k, _g(fit.curvatures[k])))
        if isinstance(fit, NreResult):
            rows.append((name, "h0", "", _g(fit.h0)))
            rows.append((name, "m", "", fit.m))
            for k in fit.J:
                for i, (b, p) in enumerate(zip(fit.amplitude[k], fit.phase[k]), 1):
                    rows.append((name, f"b{i}", k, _g(b)))
                    rows.append((name, f"phi{i}", k, _g(p)))
            for k, v in sorted(fit.s_by_k.items()):
                rows.append((name, "s_separate", k, _g(v)))
    for k, v in sorted(res.slopes.items()):
        rows.append(("per_index", "s_hat", k, _g(v)))
    rows.append(("chosen", "method", "", res.method))
    if res.peak_ratio is not None:
        rows.append(("periodogram", "peak_ratio", "", _g(res.peak_ratio)))
    if res.m_hat is not None:
        rows.append(("periodogram", "m_hat", "", res.m_hat))
    if res.relation is not None:
        rows.append(("chosen", "halfdim_discrepancy", "", _g(res.relation)))
    if res.box_dimension is not None:
        rows.append(("boxcount", "s_hat", "", _g(res.box_dimension)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("method", "quantity", "k", "value"))
    w.writerows(rows)
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(buf.getvalue())
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(buf.getvalue())


def format_report(res: Analysis) -> str:
    lines = []
    d = res.data
    lines.append(f"samples n = {d.n}, indices J = {list(d.J)}, signs = {list(d.signs)}")
    lines.append(f"chosen method: {res.method.upper()}")
    for note in res.notes:
        lines.append(f"note: {note}")
    lre = res.lre
    tag = " (s fixed)" if lre.s_known else ""
    lines.append(f"LRE  s_hat = {lre.s_hat:.6f}{tag}   residual = {lre.residual:.6g}")
    for k in lre.J:
        lines.append(f"     k={k}  beta = {lre.beta[k]: .6f}  C_k = {lre.curvatures[k]: .6g}")
    if res.nre is not None:
        nre = res.nre
        src = "estimated" if res.h0_estimated else "given"
        lines.append(
            f"NRE  s_hat = {nre.s_hat:.6f}{' (s fixed)' if nre.s_known else ''}   mode = {nre.mode}   "
            f"h0 = {nre.h0:.6f} ({src})   m = {nre.m}   residual = {nre.residual:.6g}"
        )
        if nre.s_by_k:
            lines.append("     per-index slopes: " + ", ".join(f"k={k}: {v:.6f}" for k, v in sorted(nre.s_by_k.items())))
        for k in nre.J:
            amp = ", ".join(f"({b:.4g}, {p:.4g})" for b, p in zip(nre.amplitude[k], nre.phase[k]))
            lines.append(f"     k={k}  beta = {nre.beta[k]: .6f}  C_k = {nre.curvatures[k]: .6g}  (b, phi): {amp}")
    if res.peak_ratio is not None:
        lines.append(f"periodogram peak/median = {res.peak_ratio:.4g}, m_hat = {res.m_hat}")
    if res.slopes:
        lines.append("separate fits s_k: " + ", ".join(f"k={k}: {v:.6f}" for k, v in sorted(res.slopes.items())))
    if res.relation is not None:
        lines.append(f"|C1 - (2 - s)/2 C2| / |C1| = {res.relation:.4g}")
    if res.box_dimension is not None:
        lines.append(f"box-counting dimension = {res.box_dimension:.6f}")
    return "\n".join(lines) + "\n"
