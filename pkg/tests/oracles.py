"""Slow, independent reference implementations used only by the tests."""

import math

import numpy as np


def brute_force_sq_edt(pix):
    """Squared distance of every pixel to the nearest black pixel, all pairs."""
    pix = np.asarray(pix, dtype=bool)
    h, w = pix.shape
    by, bx = np.nonzero(pix)
    yy, xx = np.mgrid[0:h, 0:w]
    d = (yy.ravel()[:, None] - by[None, :]) ** 2 + (xx.ravel()[:, None] - bx[None, :]) ** 2
    return d.min(axis=1).reshape(h, w).astype(np.int64)


def naive_histogram(pix):
    """2x2 window codes counted one window at a time over the white-padded image."""
    pix = np.asarray(pix, dtype=bool)
    h, w = pix.shape

    def at(i, j):
        return 1 if 0 <= i < h and 0 <= j < w and pix[i, j] else 0

    counts = [0] * 16
    for i in range(h + 1):
        for j in range(w + 1):
            code = at(i - 1, j - 1) + 2 * at(i - 1, j) + 4 * at(i, j - 1) + 8 * at(i, j)
            counts[code] += 1
    return np.array(counts)


def lattice_disk_count(r2):
    """Integer points with x^2 + y^2 <= r2 by direct enumeration."""
    r = int(math.isqrt(int(r2))) + 1
    return sum(1 for x in range(-r, r + 1) for y in range(-r, r + 1) if x * x + y * y <= r2)


def gauss_solve(A, b):
    """Gaussian elimination with partial pivoting on Python floats."""
    n = len(b)
    M = [list(map(float, row)) + [float(v)] for row, v in zip(A, b)]
    for c in range(n):
        p = max(range(c, n), key=lambda r: abs(M[r][c]))
        M[c], M[p] = M[p], M[c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            for k in range(c, n + 1):
                M[r][k] -= f * M[c][k]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        x[r] = (M[r][n] - sum(M[r][k] * x[k] for k in range(r + 1, n))) / M[r][r]
    return x


def lre_normal_equations(x, y_rows):
    """Common-slope fit through explicit normal equations: returns (s, [beta_k])."""
    x = [float(v) for v in x]
    K = len(y_rows)
    p = K + 1
    A = [[0.0] * p for _ in range(p)]
    b = [0.0] * p
    for k, row in enumerate(y_rows):
        for xj, yj in zip(x, row):
            design = [1.0 if i == k else 0.0 for i in range(K)] + [xj]
            for i in range(p):
                b[i] += design[i] * yj
                for j in range(p):
                    A[i][j] += design[i] * design[j]
    sol = gauss_solve(A, b)
    return sol[-1], sol[:-1]


def union_euler_by_cells(pix):
    """Euler characteristic V - E + F of the closed-square union by explicit sets."""
    pix = np.asarray(pix, dtype=bool)
    verts, edges, faces = set(), set(), 0
    for i, j in zip(*np.nonzero(pix)):
        faces += 1
        verts.update({(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)})
        edges.update({("h", i, j), ("h", i + 1, j), ("v", i, j), ("v", i, j + 1)})
    return len(verts) - len(edges) + faces
