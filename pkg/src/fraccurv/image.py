"""Binary images, PBM file I/O, exact Euclidean distance transform and dilation.

Pixels live on the integer lattice with unit spacing.  A pixel value of 1
(``True``) is black / foreground.  Distances are measured between pixel
centres, so the squared distance between any two pixels is an integer.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

__all__ = [
    "BinaryImage",
    "DistanceMap",
    "ImageFormatError",
    "read_image",
    "write_image",
    "distance_transform",
    "dilate",
    "pad_image",
    "MAX_SIDE",
]

MAX_SIDE = 8192


class ImageFormatError(ValueError):
    """Raised for malformed or oversized PBM files."""


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Immutable rectangular 0/1 pixel grid.

    ``pixels`` is a read-only boolean array of shape ``(height, width)``,
    stored row-major.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.pixels, dtype=bool)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2D array, got shape {arr.shape}")
        if arr is self.pixels:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_array(cls, array) -> "BinaryImage":
        return cls(np.asarray(array) != 0)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def count(self) -> int:
        """Number of black pixels."""
        return int(np.count_nonzero(self.pixels))

    def __eq__(self, other):
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None

    def __repr__(self):
        return f"BinaryImage({self.width}x{self.height}, black={self.count()})"


@dataclass(frozen=True, eq=False)
class DistanceMap:
    """Distance of every pixel to the nearest black pixel.

    ``sq`` holds the exact squared distances as int64; ``dist`` is derived.
    """

    sq: np.ndarray

    def __post_init__(self):
        self.sq.flags.writeable = False

    @property
    def height(self) -> int:
        return self.sq.shape[0]

    @property
    def width(self) -> int:
        return self.sq.shape[1]

    @property
    def dist(self) -> np.ndarray:
        return np.sqrt(self.sq)

    def max_dist(self) -> float:
        return float(np.sqrt(self.sq.max()))


# ---------------------------------------------------------------------------
# PBM I/O

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    m = _TOKEN.match(data, pos)
    if m is None:
        raise ImageFormatError("truncated PBM header")
    return m.group(1), m.end()


def read_image(path, max_side: int = MAX_SIDE) -> BinaryImage:
    """Read a plain (P1) or raw (P4) PBM file."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, pos = _next_token(data, 0)
    if magic not in (b"P1", b"P4"):
        raise ImageFormatError(f"unsupported magic number {magic!r}; expected P1 or P4")
    try:
        w_tok, pos = _next_token(data, pos)
        h_tok, pos = _next_token(data, pos)
        width, height = int(w_tok), int(h_tok)
    except ValueError as exc:
        raise ImageFormatError("malformed PBM dimensions") from exc
    if width < 1 or height < 1:
        raise ImageFormatError(f"invalid dimensions {width}x{height}")
    if width > max_side or height > max_side:
        raise ImageFormatError(f"image {width}x{height} exceeds the size limit {max_side}")

    if magic == b"P4":
        # exactly one whitespace byte separates the header from the raster
        pos += 1
        row_bytes = (width + 7) // 8
        raw = np.frombuffer(data, dtype=np.uint8, count=-1, offset=pos) if pos <= len(data) else np.empty(0, np.uint8)
        if raw.size < row_bytes * height:
            raise ImageFormatError(
                f"raster too short: {raw.size} bytes for {width}x{height} (need {row_bytes * height})"
            )
        bits = np.unpackbits(raw[: row_bytes * height].reshape(height, row_bytes), axis=1)
        return BinaryImage(bits[:, :width].astype(bool))

    body = re.sub(rb"#[^\n]*", b"", data[pos:])
    digits = np.frombuffer(re.sub(rb"\s+", b"", body), dtype=np.uint8)
    if digits.size != width * height:
        raise ImageFormatError(f"expected {width * height} pixels, found {digits.size}")
    if np.any((digits != ord("0")) & (digits != ord("1"))):
        raise ImageFormatError("plain PBM raster may only contain 0 and 1")
    return BinaryImage((digits == ord("1")).reshape(height, width))


def write_image(img: BinaryImage, path, plain: bool = False) -> None:
    """Write ``img`` as raw PBM (P4), or plain PBM (P1) when ``plain`` is set."""
    h, w = img.shape
    if plain:
        lines = [b"P1", f"{w} {h}".encode()]
        chars = np.where(img.pixels, ord("1"), ord("0")).astype(np.uint8)
        # keep lines under 70 characters as the format recommends
        for row in chars:
            for start in range(0, w, 64):
                lines.append(row[start : start + 64].tobytes())
        payload = b"\n".join(lines) + b"\n"
    else:
        packed = np.packbits(img.pixels, axis=1)
        payload = b"P4\n" + f"{w} {h}\n".encode() + packed.tobytes()
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def pad_image(img: BinaryImage, margin: int) -> BinaryImage:
    """Surround ``img`` with ``margin`` white pixels on every side."""
    if margin < 0:
        raise ValueError("margin must be non-negative")
    if margin == 0:
        return img
    return BinaryImage(np.pad(img.pixels, margin, constant_values=False))


# ---------------------------------------------------------------------------
# Distance transform (Meijster, Roerdink & Hesselink two-pass scheme)


@njit(parallel=True, cache=True)
def _column_pass(pix, inf):
    h, w = pix.shape
    g = np.empty((h, w), dtype=np.int64)
    for x in prange(w):
        g[0, x] = 0 if pix[0, x] else inf
        for y in range(1, h):
            g[y, x] = 0 if pix[y, x] else g[y - 1, x] + 1
        for y in range(h - 2, -1, -1):
            if g[y + 1, x] < g[y, x]:
                g[y, x] = g[y + 1, x] + 1
    return g


@njit(parallel=True, cache=True)
def _row_pass(g):
    h, w = g.shape
    out = np.empty((h, w), dtype=np.int64)
    for y in prange(h):
        s = np.empty(w, dtype=np.int64)
        t = np.empty(w, dtype=np.int64)
        row = g[y]
        q = 0
        s[0] = 0
        t[0] = 0
        for u in range(1, w):
            gu2 = row[u] * row[u]
            # pop parabolas that are dominated by u at their own start point
            while q >= 0:
                sq_ = s[q]
                a = t[q] - sq_
                b = t[q] - u
                if a * a + row[sq_] * row[sq_] > b * b + gu2:
                    q -= 1
                else:
                    break
            if q < 0:
                q = 0
                s[0] = u
            else:
                i = s[q]
                num = u * u - i * i + gu2 - row[i] * row[i]
                sep = num // (2 * (u - i))
                wpos = 1 + sep
                if wpos < w:
                    q += 1
                    s[q] = u
                    t[q] = wpos
        for u in range(w - 1, -1, -1):
            i = s[q]
            d = u - i
            out[y, u] = d * d + row[i] * row[i]
            if u == t[q]:
                q -= 1
    return out


def distance_transform(img: BinaryImage) -> DistanceMap:
    """Exact squared Euclidean distance of each pixel to the nearest black pixel.

    Runs in O(width * height) with integer arithmetic only; columns are
    processed in the first pass and rows in the second.
    """
    if not img.pixels.any():
        raise ValueError("distance transform of an all-white image is undefined")
    inf = img.height + img.width
    g = _column_pass(img.pixels, inf)
    return DistanceMap(_row_pass(g))


def squared_threshold(eps: float) -> int:
    """Largest integer ``k`` with ``k <= eps**2``; pixel p is inside iff sq(p) <= k."""
    if eps < 0:
        raise ValueError("dilation radius must be non-negative")
    eps = float(eps)
    k = int(math.floor(eps * eps))
    # settle rounding in eps*eps so that the rule agrees with sqrt(sq) <= eps
    while math.sqrt(k + 1) <= eps:
        k += 1
    while k > 0 and math.sqrt(k) > eps:
        k -= 1
    return k


def dilate(dmap: DistanceMap, eps: float) -> BinaryImage:
    """Parallel set: every pixel within Euclidean distance ``eps`` of a black pixel."""
    return BinaryImage(dmap.sq <= squared_threshold(eps))
