"""Symmetric tridiagonal eigensolver (implicit-shift QL).

Only selected rows of the eigenvector matrix are accumulated, which keeps
the cost at O(n^2) when just the first and last components are needed.
Passing ``rows=None`` accumulates the full orthonormal basis.
"""

from __future__ import annotations

import math

import numpy as np


class EigenConvergenceError(RuntimeError):
    pass


def tridiag_eigen(diag, offdiag, rows=(0, -1), max_iter=60):
    """Eigenvalues and selected eigenvector rows of a symmetric tridiagonal matrix.

    Args:
        diag: main diagonal, length n.
        offdiag: sub/super diagonal, length n-1.
        rows: indices of eigenvector rows to accumulate, or None for all.
        max_iter: QL sweeps allowed per eigenvalue.

    Returns:
        (eigenvalues sorted ascending, array of shape (len(rows), n)) where
        column k of the second array holds the requested components of the
        unit eigenvector belonging to eigenvalue k.
    """
    d = [float(x) for x in diag]
    n = len(d)
    e = [float(x) for x in offdiag] + [0.0]
    if len(e) != n:
        raise ValueError("offdiag must have length len(diag) - 1")
    if rows is None:
        rows = list(range(n))
    rows = [i % n for i in rows] if n else []
    z = [[1.0 if j == i else 0.0 for j in range(n)] for i in rows]

    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= 2.2e-16 * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise EigenConvergenceError(f"QL failed to converge for eigenvalue {l}")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            rr = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(rr, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                rr = math.hypot(f, g)
                e[i + 1] = rr
                if rr == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / rr
                c = g / rr
                g = d[i + 1] - p
                rr = (d[i] - g) * s + 2.0 * c * b
                p = s * rr
                d[i + 1] = g + p
                g = c * rr - b
                for zr in z:
                    f2 = zr[i + 1]
                    zr[i + 1] = s * zr[i] + c * f2
                    zr[i] = c * zr[i] - s * f2
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0

    order = sorted(range(n), key=lambda k: d[k])
    vals = np.array([d[k] for k in order])
    vecs = np.array([[zr[k] for k in order] for zr in z]).reshape(len(rows), n)
    return vals, vecs
