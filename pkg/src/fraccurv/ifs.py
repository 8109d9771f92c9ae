"""Iterated function systems of planar similarities and their attractors.

A similarity acts on the plane as ``p -> ratio * R(rotation) @ F @ p + t``
where ``F`` mirrors the y axis when ``reflection`` is set.  All presets live
in the unit square, which the rasterizer maps onto the pixel canvas.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .image import BinaryImage

__all__ = [
    "Similarity",
    "IfsSystem",
    "Arithmetic",
    "NonArithmetic",
    "similarity_dimension",
    "classify_arithmeticity",
    "rasterize",
    "preset",
    "PRESETS",
    "read_ifs",
    "NodeBudgetExceeded",
]

DEFAULT_NODE_BUDGET = 50_000_000
# leaves are marked in pixel space with this slack so that copies whose edges
# fall exactly on pixel boundaries do not spill into the neighbouring pixel
EDGE_TOL = 1e-7


class NodeBudgetExceeded(RuntimeError):
    """A fixed subdivision depth would generate too many copies."""


@dataclass(frozen=True)
class Similarity:
    ratio: float
    rotation: float = 0.0
    reflection: bool = False
    translation: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"contraction ratio must lie in (0, 1), got {self.ratio}")
        object.__setattr__(self, "translation", (float(self.translation[0]), float(self.translation[1])))

    def linear(self) -> np.ndarray:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        m = self.ratio * np.array([[c, -s], [s, c]])
        if self.reflection:
            m = m @ np.diag([1.0, -1.0])
        return m

    def __call__(self, p):
        return self.linear() @ np.asarray(p, dtype=float) + np.asarray(self.translation)


@dataclass(frozen=True)
class IfsSystem:
    maps: tuple[Similarity, ...]
    name: str = "ifs"

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise ValueError("an IFS needs at least one map")
        object.__setattr__(self, "maps", maps)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([m.ratio for m in self.maps])

    def __len__(self):
        return len(self.maps)


# ---------------------------------------------------------------------------
# dimension and arithmeticity


def similarity_dimension(sys: IfsSystem) -> float:
    """Unique ``s >= 0`` with ``sum(r_i**s) == 1``."""
    r = sys.ratios
    if len(r) == 1:
        return 0.0
    f = lambda s: float(np.sum(r**s)) - 1.0  # noqa: E731
    # strictly decreasing from N - 1 > 0 at s = 0
    return brentq(f, 0.0, 64.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True)
class Arithmetic:
    h: float
    tolerance: float = 1e-9


@dataclass(frozen=True)
class NonArithmetic:
    tolerance: float = 1e-9


def classify_arithmeticity(sys: IfsSystem, tol: float = 1e-9, max_denominator: int = 10**6):
    """Decide whether all ``-log r_i`` lie on a common lattice ``h * Z``.

    Each ``-log r_i`` is compared with the first one through a rational
    approximation with bounded denominator.  The candidate lattice constant is
    the first value divided by the lcm of the denominators (and scaled by the
    gcd of the resulting numerators), i.e. the largest ``h`` compatible with
    every ratio.  The candidate is accepted when every ``-log r_i / h`` is
    within ``tol`` of an integer; measuring the error in units of ``h`` keeps
    large-denominator near-misses (such as log 2 / log 3) out.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    y = -np.log(sys.ratios)
    ref = float(y[0])
    fracs = [Fraction(float(v) / ref).limit_denominator(max_denominator) for v in y]
    den = reduce(math.lcm, (f.denominator for f in fracs))
    nums = [f.numerator * (den // f.denominator) for f in fracs]
    g = reduce(math.gcd, nums)
    h = ref * g / den
    k = y / h
    if np.all(np.abs(k - np.round(k)) <= tol) and np.all(np.round(k) >= 1):
        return Arithmetic(h=float(h), tolerance=tol)
    return NonArithmetic(tolerance=tol)


# ---------------------------------------------------------------------------
# rasterization


def _node_arrays(sys: IfsSystem):
    lin = np.stack([m.linear() for m in sys.maps])
    trans = np.array([m.translation for m in sys.maps])
    return lin, trans, sys.ratios


def _mark_leaves(canvas, lin, trans, scale, offset):
    """Set every pixel whose open square meets the bounding box of a leaf copy."""
    side_h, side_w = canvas.shape
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    pts = np.einsum("nij,cj->nci", lin, corners) + trans[:, None, :]
    pts = pts * scale + offset
    lo = pts.min(axis=1)
    hi = pts.max(axis=1)
    i0 = np.floor(lo + EDGE_TOL).astype(np.int64)
    i1 = np.maximum(i0, np.ceil(hi - EDGE_TOL).astype(np.int64) - 1)
    span = i1 - i0
    if np.any(span > 1):
        # larger leaves only occur with fixed depth; fill their boxes one by one
        for (x0, y0), (x1, y1) in zip(i0[np.any(span > 1, axis=1)], i1[np.any(span > 1, axis=1)]):
            canvas[max(y0, 0) : min(y1, side_h - 1) + 1, max(x0, 0) : min(x1, side_w - 1) + 1] = True
        keep = ~np.any(span > 1, axis=1)
        i0, i1 = i0[keep], i1[keep]
    for dx in (0, 1):
        for dy in (0, 1):
            x = i0[:, 0] + dx
            yy = i0[:, 1] + dy
            ok = (x <= i1[:, 0]) & (yy <= i1[:, 1]) & (x >= 0) & (yy >= 0) & (x < side_w) & (yy < side_h)
            canvas[yy[ok], x[ok]] = True


def rasterize(
    sys: IfsSystem,
    side: int,
    depth: int | None = None,
    margin: int = 0,
    node_budget: int = DEFAULT_NODE_BUDGET,
    chunk: int = 1 << 18,
) -> BinaryImage:
    """Binary image of the attractor on a ``side x side`` canvas.

    The unit square is mapped onto the pixel range ``[margin, side - margin]``
    and subdivided depth first.  With ``depth=None`` a copy becomes a leaf as
    soon as its diameter is below one pixel; otherwise every branch stops after
    exactly ``depth`` levels.  Pixel ``(row, col)`` covers
    ``[col, col+1] x [row, row+1]`` in canvas units, so rows follow the y axis.

    Parameters
    ----------
    sys : IfsSystem
    side : int
        Canvas size in pixels, at least 16.
    depth : int, optional
        Fixed recursion depth.
    margin : int
        White border around the unit square, in pixels.
    node_budget : int
        Upper bound on the number of leaf copies for a fixed depth.
    chunk : int
        Copies expanded per step; bounds peak memory, not the output.
    """
    if side < 16:
        raise ValueError("side must be at least 16 pixels")
    if margin < 0 or 2 * margin >= side:
        raise ValueError("margin must leave a non-empty drawing area")
    scale = float(side - 2 * margin)
    n_maps = len(sys)
    if depth is not None:
        if depth < 0:
            raise ValueError("depth must be non-negative")
        if n_maps**depth > node_budget:
            raise NodeBudgetExceeded(f"{n_maps}^{depth} copies exceed the node budget {node_budget}")

    m_lin, m_trans, m_ratio = _node_arrays(sys)
    canvas = np.zeros((side, side), dtype=bool)
    # node state: linear part, translation, accumulated ratio, level
    stack = [(np.eye(2)[None], np.zeros((1, 2)), np.ones(1), 0)]
    while stack:
        lin, trans, ratio, level = stack.pop()
        if depth is None:
            leaf = ratio * math.sqrt(2.0) * scale < 1.0
        else:
            leaf = np.full(len(ratio), level >= depth)
        if leaf.any():
            _mark_leaves(canvas, lin[leaf], trans[leaf], scale, float(margin))
        inner = ~leaf
        if not inner.any():
            continue
        lin, trans, ratio = lin[inner], trans[inner], ratio[inner]
        # children: (L, t) o (A_i, b_i) = (L A_i, L b_i + t)
        new_lin = np.einsum("nij,mjk->nmik", lin, m_lin).reshape(-1, 2, 2)
        new_trans = (np.einsum("nij,mj->nmi", lin, m_trans) + trans[:, None, :]).reshape(-1, 2)
        new_ratio = (ratio[:, None] * m_ratio[None, :]).ravel()
        # push in reverse so that chunks are processed in natural order
        starts = list(range(0, len(new_ratio), chunk))
        for start in reversed(starts):
            sl = slice(start, start + chunk)
            stack.append((new_lin[sl], new_trans[sl], new_ratio[sl], level + 1))
    return BinaryImage(canvas)


# ---------------------------------------------------------------------------
# presets

_SQ3 = math.sqrt(3.0)
_CENTROID = np.array([0.5, _SQ3 / 6.0])


def _grid_maps(cells, n=3):
    r = 1.0 / n
    return tuple(Similarity(r, translation=(i * r, j * r)) for i, j in cells)


def _inverted(ratio, centre):
    """Copy turned by 180 degrees whose centroid lands on ``centre``."""
    c = np.asarray(centre, dtype=float)
    t = c + ratio * _CENTROID
    return Similarity(ratio, rotation=math.pi, translation=(t[0], t[1]))


def _gasket():
    h = _SQ3 / 4.0
    return IfsSystem(
        (Similarity(0.5, translation=(0.0, 0.0)), Similarity(0.5, translation=(0.5, 0.0)), Similarity(0.5, translation=(0.25, h))),
        "gasket",
    )


def _carpet():
    cells = [(i, j) for i in range(3) for j in range(3) if (i, j) != (1, 1)]
    return IfsSystem(_grid_maps(cells), "carpet")


def _modified_carpet():
    cells = [(i, j) for i in range(3) for j in range(3) if (i, j) != (0, 0)]
    return IfsSystem(_grid_maps(cells), "modified-carpet")


def _triangle():
    r = 0.45
    h = _SQ3 / 2.0
    corners = (
        Similarity(r, translation=(0.0, 0.0)),
        Similarity(r, translation=(1.0 - r, 0.0)),
        Similarity(r, translation=(0.5 - r / 2.0, (1.0 - r) * h)),
    )
    return IfsSystem(corners + (_inverted(0.31, _CENTROID),), "triangle")


def _cross():
    edges = _grid_maps([(1, 0), (0, 1), (2, 1), (1, 2)])
    r = 0.3
    corners = tuple(
        Similarity(r, translation=(x, y)) for x in (0.0, 1.0 - r) for y in (0.0, 1.0 - r)
    )
    return IfsSystem(edges + corners, "cross")


def _supergasket():
    a = 1.0 / 3.0
    h = _SQ3 / 2.0
    upright = []
    inverted = []
    for row in range(3):
        for col in range(3 - row):
            x0 = (col + row / 2.0) * a
            y0 = row * a * h
            upright.append(Similarity(a, translation=(x0, y0)))
            if col < 2 - row:
                # downward cell between two upright neighbours
                centre = (x0 + a, y0 + a * h * 2.0 / 3.0)
                inverted.append(_inverted(0.27, centre))
    return IfsSystem(tuple(upright) + tuple(inverted), "supergasket")


def _fullsquare():
    return IfsSystem(_grid_maps([(0, 0), (1, 0), (0, 1), (1, 1)], n=2), "fullsquare")


PRESETS = {
    "gasket": _gasket,
    "carpet": _carpet,
    "modified-carpet": _modified_carpet,
    "triangle": _triangle,
    "cross": _cross,
    "supergasket": _supergasket,
    "fullsquare": _fullsquare,
}


def preset(name: str) -> IfsSystem:
    key = name.strip().lower().replace("_", "-").replace(" ", "-")
    if key not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return PRESETS[key]()


_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f"}


def read_ifs(path) -> IfsSystem:
    """Read an IFS from text: one map per line, ``ratio rotation_deg reflect tx ty``.

    Fields may be separated by whitespace or commas; ``#`` starts a comment.
    """
    maps = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f for f in re.split(r"[,\s]+", line) if f]
        if len(fields) != 5:
            raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(fields)}")
        flag = fields[2].lower()
        if flag not in _TRUE | _FALSE:
            raise ValueError(f"{path}:{lineno}: bad reflect flag {fields[2]!r}")
        try:
            ratio, rot, tx, ty = (float(fields[i]) for i in (0, 1, 3, 4))
            maps.append(Similarity(ratio, math.radians(rot), flag in _TRUE, (tx, ty)))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return IfsSystem(tuple(maps), Path(path).stem)
