"""Span bookkeeping over sparse word-indexed vectors."""

from __future__ import annotations

import numpy as np

PIVOT_TOL = 1e-10


class LinearSpan:
    """Incrementally built linear span of sparse vectors (dict key -> complex).

    Membership and coordinates are decided by least squares with a pivot
    tolerance, which separates genuine new directions from rewriting
    round-off.
    """

    def __init__(self, tol=PIVOT_TOL):
        self.tol = tol
        self.vectors = []          # list of dicts
        self._col = {}             # key -> column index

    def dim(self):
        return len(self.vectors)

    def _ensure_cols(self, vec):
        for k in vec:
            if k not in self._col:
                self._col[k] = len(self._col)

    def _matrix(self):
        a = np.zeros((len(self._col), len(self.vectors)), dtype=complex)
        for j, v in enumerate(self.vectors):
            for k, c in v.items():
                a[self._col[k], j] = c
        return a

    def _dense(self, vec):
        b = np.zeros(len(self._col), dtype=complex)
        for k, c in vec.items():
            b[self._col[k]] = c
        return b

    def coords(self, vec):
        """Coordinates of vec in the span, or (None, residual) if outside."""
        self._ensure_cols(vec)
        b = self._dense(vec)
        if not self.vectors:
            res = float(np.linalg.norm(b))
            return (None, res) if res > self.tol else (np.zeros(0, dtype=complex), 0.0)
        a = self._matrix()
        x, *_ = np.linalg.lstsq(a, b, rcond=None)
        res = float(np.linalg.norm(a @ x - b))
        scale = max(1.0, float(np.linalg.norm(b)))
        if res > self.tol * scale:
            return None, res
        return x, res

    def add(self, vec):
        """Add vec if it is a new direction; returns True if added."""
        x, _res = self.coords(vec)
        if x is None:
            self.vectors.append(dict(vec))
            return True
        return False
