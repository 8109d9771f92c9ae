"""Box-counting dimension of a binary image."""

from __future__ import annotations

import numpy as np

from ..image import BinaryImage

__all__ = ["box_counts", "box_count_dimension"]


def box_counts(img: BinaryImage, deltas) -> np.ndarray:
    """Number of ``delta x delta`` boxes of the grid anchored at the origin that hold a black pixel."""
    out = []
    p = img.pixels
    h, w = p.shape
    for d in deltas:
        d = int(d)
        if d < 1:
            raise ValueError("box sizes must be positive integers")
        hh, ww = -(-h // d) * d, -(-w // d) * d
        q = np.zeros((hh, ww), dtype=bool)
        q[:h, :w] = p
        out.append(int(q.reshape(hh // d, d, ww // d, d).any(axis=(1, 3)).sum()))
    return np.array(out, dtype=np.int64)


def box_count_dimension(img: BinaryImage, deltas=(2, 4, 8, 16, 32, 64, 128)) -> float:
    """Slope of ``log N_delta`` against ``-log delta`` by ordinary least squares."""
    deltas = np.asarray(sorted(set(int(d) for d in deltas)))
    if deltas.size < 3:
        raise ValueError("need at least three box sizes")
    if not img.pixels.any():
        raise ValueError("box counting of an empty image is undefined")
    n = box_counts(img, deltas)
    slope, _ = np.polyfit(-np.log(deltas), np.log(n), 1)
    return float(slope)
