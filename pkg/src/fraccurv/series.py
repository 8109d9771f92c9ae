"""Dilation radii schedules, the measurement loop and regression variables.

For a radius ``eps`` the regression variables are ``x = -log(eps)`` and
``y_k = log(eps**-k * |C_k|)`` for ``k = 0, 1, 2``.  Signs of ``C_k`` are
recorded separately so that fitted curvatures can be given their sign back.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .image import BinaryImage, DistanceMap, distance_transform, squared_threshold
from .minkowski import threshold_histogram, volumes_from_histogram

__all__ = [
    "LogArithmetic",
    "Power",
    "EqualArea",
    "Explicit",
    "RadiiSchedule",
    "DEFAULT_SCHEDULE",
    "build_schedule",
    "parse_schedule",
    "CurvatureSeries",
    "RegressionData",
    "measure_series",
    "validate_signs",
    "to_regression",
    "write_series_csv",
    "read_series_csv",
    "BorderContactWarning",
    "SeriesFormatError",
]

INDICES = (0, 1, 2)
DEFAULT_MIN_RADIUS = 2.0
ZERO_FRACTION_LIMIT = 0.10
CSV_COLUMNS = ("eps", "x", "c0", "c1", "c2", "y0", "y1", "y2")


class BorderContactWarning(UserWarning):
    """The largest dilation reaches the canvas border; c0 and c1 are biased."""


class SeriesFormatError(ValueError):
    """Malformed series CSV."""


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class LogArithmetic:
    """``x_j = a0 + a*j`` for ``j = 0..n-1``."""

    a0: float = -4.5
    a: float = 0.02
    n: int = 176

    def x_values(self):
        return self.a0 + self.a * np.arange(self.n)


@dataclass(frozen=True)
class Power:
    """``x_j = c * j**delta`` for ``j = 1..n``."""

    c: float = 1.0
    delta: float = 0.4
    n: int = 100

    def x_values(self):
        return self.c * np.arange(1, self.n + 1, dtype=float) ** self.delta


@dataclass(frozen=True)
class EqualArea:
    """Radii at which the lattice disk has exactly the area of the Euclidean one.

    ``eps = sqrt(N / pi)`` for the first ``n`` integers ``N`` such that the
    closed disk of that radius contains exactly ``N`` lattice points.
    """

    n: int = 10

    def x_values(self):
        out = []
        count = 0
        while len(out) < self.n:
            count += 1
            eps = math.sqrt(count / math.pi)
            if _lattice_disk_count(count / math.pi) == count:
                out.append(-math.log(eps))
        # ascending eps means descending x; schedules are sorted later
        return np.array(out)


@dataclass(frozen=True)
class Explicit:
    radii: tuple[float, ...]

    def x_values(self):
        return -np.log(np.asarray(self.radii, dtype=float))


def _lattice_disk_count(r2: float) -> int:
    r = int(math.isqrt(int(math.floor(r2))))
    ys = np.arange(-r, r + 1)
    # integer points with x^2 + y^2 <= r2
    rem = np.floor(r2 - ys.astype(float) ** 2 + 1e-12)
    half = np.floor(np.sqrt(np.maximum(rem, 0.0)) + 1e-12).astype(np.int64)
    return int(np.sum(2 * half + 1))


@dataclass(frozen=True)
class RadiiSchedule:
    """Radii in strictly decreasing order and their ``x = -log(eps)``."""

    kind: object
    radii: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return -np.log(self.radii)

    def __len__(self):
        return len(self.radii)


DEFAULT_SCHEDULE = LogArithmetic()


def build_schedule(spec=DEFAULT_SCHEDULE, min_radius: float | None = DEFAULT_MIN_RADIUS) -> RadiiSchedule:
    """Turn a schedule description into sorted radii.

    Parameters
    ----------
    spec : LogArithmetic, Power, EqualArea or Explicit
    min_radius : float or None
        Smallest admissible radius in pixels; below about two pixels the
        discretisation error dominates.  ``None`` disables the check, which
        synthetic studies that only use ``x`` need.
    """
    if isinstance(spec, Explicit):
        r = np.asarray(spec.radii, dtype=float)
        if r.size == 0:
            raise ValueError("empty schedule")
        d = np.diff(r)
        if not (np.all(d < 0) or np.all(d > 0)):
            raise ValueError("explicit radii must be strictly monotone")
        radii = np.sort(r)[::-1].copy()
    else:
        x = np.asarray(spec.x_values(), dtype=float)
        if x.size == 0:
            raise ValueError("empty schedule")
        radii = np.sort(np.exp(-x))[::-1].copy()
    if np.any(radii <= 0) or not np.all(np.isfinite(radii)):
        raise ValueError("radii must be positive and finite")
    if np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be distinct")
    if min_radius is not None and radii[-1] < min_radius:
        raise ValueError(f"smallest radius {radii[-1]:.4g} is below the minimum {min_radius}")
    radii.flags.writeable = False
    return RadiiSchedule(spec, radii)


def parse_schedule(text: str):
    """Parse ``log:A0:A:N``, ``power:C:DELTA:N``, ``equal-area:N`` or ``explicit:R1,R2,...``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    parts = [p for p in rest.replace(",", ":").split(":") if p.strip()]
    try:
        if kind in ("log", "log-arithmetic"):
            if not parts:
                return DEFAULT_SCHEDULE
            a0, a, n = parts
            return LogArithmetic(float(a0), float(a), int(n))
        if kind == "power":
            c, delta, n = parts
            return Power(float(c), float(delta), int(n))
        if kind in ("equal-area", "equalarea"):
            (n,) = parts
            return EqualArea(int(n))
        if kind == "explicit":
            return Explicit(tuple(float(p) for p in parts))
    except ValueError as exc:
        raise ValueError(f"cannot parse schedule {text!r}: {exc}") from exc
    raise ValueError(f"unknown schedule kind {kind!r}")


# ---------------------------------------------------------------------------
# measurement


@dataclass(frozen=True)
class CurvatureSeries:
    """Intrinsic volumes of the parallel sets, one entry per radius.

    ``signs[k]`` is +1, -1, or 0 for an index that failed the sign screen.
    ``dropped`` lists the ``(k, j)`` samples that were left out.
    """

    eps: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    signs: tuple[int, int, int] | None = None
    dropped: tuple[tuple[int, int], ...] = ()
    excluded: tuple[int, ...] = ()

    def __post_init__(self):
        eps = np.asarray(self.eps, dtype=float)
        if eps.ndim != 1 or eps.size == 0:
            raise ValueError("series needs at least one radius")
        if np.any(np.diff(eps) >= 0):
            raise ValueError("radii must be strictly decreasing")
        for name in ("c0", "c1", "c2"):
            arr = np.asarray(getattr(self, name), dtype=np.int64 if name == "c0" else float)
            if arr.shape != eps.shape:
                raise ValueError(f"{name} has the wrong length")
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        eps = eps.copy()
        eps.flags.writeable = False
        object.__setattr__(self, "eps", eps)

    def __len__(self):
        return len(self.eps)

    @property
    def x(self) -> np.ndarray:
        return -np.log(self.eps)

    def values(self, k: int) -> np.ndarray:
        return (self.c0, self.c1, self.c2)[k].astype(float)

    def retained(self) -> tuple[int, ...]:
        return tuple(k for k in INDICES if k not in self.excluded)

    def mask(self, k: int) -> np.ndarray:
        m = np.ones(len(self), dtype=bool)
        for kk, j in self.dropped:
            if kk == k:
                m[j] = False
        return m


def _border_min(sq: np.ndarray) -> int:
    return int(min(sq[0].min(), sq[-1].min(), sq[:, 0].min(), sq[:, -1].min()))


def measure_series(img: BinaryImage | DistanceMap, sched: RadiiSchedule) -> CurvatureSeries:
    """Intrinsic volumes of every parallel set in the schedule.

    A single distance transform is shared by all radii; each radius costs one
    threshold scan.  Warns with :class:`BorderContactWarning` when the largest
    parallel set reaches the canvas edge.
    """
    dmap = img if isinstance(img, DistanceMap) else distance_transform(img)
    radii = np.asarray(sched.radii, dtype=float)
    thresholds = [squared_threshold(e) for e in radii]
    if _border_min(dmap.sq) <= max(thresholds):
        warnings.warn(
            f"the parallel set for eps={radii.max():.4g} touches the canvas border; "
            "pad the image so that c0 and c1 are not biased",
            BorderContactWarning,
            stacklevel=2,
        )
    vols = [volumes_from_histogram(threshold_histogram(dmap.sq, t)) for t in thresholds]
    return CurvatureSeries(
        eps=radii,
        c0=np.array([v.c0 for v in vols], dtype=np.int64),
        c1=np.array([v.c1 for v in vols]),
        c2=np.array([v.c2 for v in vols]),
    )


def validate_signs(series: CurvatureSeries, majority: bool = False) -> CurvatureSeries:
    """Screen every index for a constant sign.

    Zero samples are dropped (their logarithm is undefined).  An index is
    excluded when its non-zero samples change sign, or when more than 10% of
    its samples are zero.  With ``majority=True`` a mixed-sign index keeps
    the samples of its majority sign instead; this is meant for exploration.
    """
    signs = []
    dropped = []
    excluded = []
    n = len(series)
    for k in INDICES:
        v = series.values(k)
        zero = np.flatnonzero(v == 0)
        dropped.extend((k, int(j)) for j in zero)
        pos = int(np.sum(v > 0))
        neg = int(np.sum(v < 0))
        if pos and neg:
            if majority and pos != neg:
                sgn = 1 if pos > neg else -1
                dropped.extend((k, int(j)) for j in np.flatnonzero(np.sign(v) == -sgn))
                signs.append(sgn)
            else:
                signs.append(0)
                excluded.append(k)
                continue
        elif pos or neg:
            signs.append(1 if pos else -1)
        else:
            signs.append(0)
            excluded.append(k)
            continue
        if zero.size > ZERO_FRACTION_LIMIT * n:
            excluded.append(k)
    return replace(series, signs=tuple(signs), dropped=tuple(sorted(set(dropped))), excluded=tuple(excluded))


@dataclass(frozen=True)
class RegressionData:
    """Regression variables.

    ``y`` has shape ``(3, n)`` with NaN where a sample was dropped; ``mask``
    flags the usable entries.  Only rows listed in ``J`` enter a fit.
    """

    x: np.ndarray
    y: np.ndarray
    J: tuple[int, ...]
    signs: tuple[int, int, int] = (1, 1, 1)
    mask: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        if y.shape[0] != 3:
            # shorthand: a single row is taken as k = J[0]
            full = np.full((3, x.size), np.nan)
            for row, k in zip(y, self.J):
                full[k] = row
            y = full
        if y.shape[1] != x.size:
            raise ValueError("x and y lengths differ")
        J = tuple(sorted(set(int(k) for k in self.J)))
        if not J:
            raise ValueError("index set J is empty")
        if any(k not in INDICES for k in J):
            raise ValueError(f"J must be a subset of {INDICES}")
        mask = np.isfinite(y) if self.mask is None else np.asarray(self.mask, dtype=bool) & np.isfinite(y)
        for k in J:
            if not np.all(np.isfinite(y[k][mask[k]])):
                raise ValueError(f"non-finite y for k={k}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "mask", mask)

    @property
    def n(self) -> int:
        return self.x.size

    def complete(self) -> bool:
        """True when no sample of any index in J is missing."""
        return bool(all(self.mask[k].all() for k in self.J))

    def restrict(self, J) -> "RegressionData":
        return RegressionData(self.x, self.y, tuple(J), self.signs, self.mask)

    @classmethod
    def from_arrays(cls, x, y_by_k: dict, signs=(1, 1, 1)):
        x = np.asarray(x, dtype=float)
        y = np.full((3, x.size), np.nan)
        for k, row in y_by_k.items():
            y[k] = row
        return cls(x, y, tuple(y_by_k), tuple(signs))


def _log_terms(series: CurvatureSeries) -> np.ndarray:
    eps = series.eps
    y = np.full((3, len(series)), np.nan)
    with np.errstate(divide="ignore"):
        for k in INDICES:
            v = np.abs(series.values(k))
            ok = v > 0
            y[k, ok] = np.log(v[ok]) - k * np.log(eps[ok])
    return y


def to_regression(series: CurvatureSeries, J: Sequence[int] | None = None, min_samples: int = 3) -> RegressionData:
    """Regression variables for the indices in ``J`` (default: all retained).

    The series is sign-screened first when that has not happened yet.
    """
    if series.signs is None:
        series = validate_signs(series)
    retained = series.retained()
    if J is None:
        J = retained
    J = tuple(sorted(set(J)))
    bad = [k for k in J if k not in retained]
    if bad:
        raise ValueError(f"indices {bad} were excluded by the sign screen")
    if not J:
        raise ValueError("index set J is empty after exclusions")
    y = _log_terms(series)
    mask = np.stack([series.mask(k) for k in INDICES]) & np.isfinite(y)
    for k in J:
        if mask[k].sum() < min_samples:
            raise ValueError(f"index {k} has fewer than {min_samples} usable samples")
    return RegressionData(series.x, y, J, series.signs, mask)


# ---------------------------------------------------------------------------
# CSV


def _fmt(v: float) -> str:
    if not np.isfinite(v):
        return ""
    return "%.17g" % v


def write_series_csv(series: CurvatureSeries, path) -> None:
    y = _log_terms(series)
    x = series.x
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for j in range(len(series)):
        w.writerow(
            [_fmt(series.eps[j]), _fmt(x[j]), str(int(series.c0[j])), _fmt(series.c1[j]), _fmt(series.c2[j])]
            + [_fmt(y[k, j]) for k in INDICES]
        )
    Path(path).write_text(buf.getvalue())


def read_series_csv(path) -> CurvatureSeries:
    """Read a series written by :func:`write_series_csv`.

    Only ``eps`` and the curvatures are used; ``x`` and ``y`` are recomputed,
    which keeps the result identical to the in-process pipeline.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SeriesFormatError(f"{path}: empty file")
    header = [h.strip().lower() for h in rows[0]]
    try:
        idx = {name: header.index(name) for name in ("eps", "c0", "c1", "c2")}
    except ValueError as exc:
        raise SeriesFormatError(f"{path}: header must contain eps, c0, c1, c2") from exc
    eps, c0, c1, c2 = [], [], [], []
    for lineno, row in enumerate(rows[1:], 2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            eps.append(float(row[idx["eps"]]))
            c0v = float(row[idx["c0"]])
            if c0v != int(c0v):
                raise ValueError("c0 must be an integer")
            c0.append(int(c0v))
            c1.append(float(row[idx["c1"]]))
            c2.append(float(row[idx["c2"]]))
        except (ValueError, IndexError) as exc:
            raise SeriesFormatError(f"{path}:{lineno}: {exc}") from exc
    if not eps:
        raise SeriesFormatError(f"{path}: no data rows")
    try:
        return CurvatureSeries(np.array(eps), np.array(c0), np.array(c1), np.array(c2))
    except ValueError as exc:
        raise SeriesFormatError(f"{path}: {exc}") from exc
