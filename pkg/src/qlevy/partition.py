"""Partitions of an interval, ordered by refinement."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameter


class Partition:
    """Strictly increasing times t0 < ... < tn with endpoints (s, t)."""

    def __init__(self, times):
        times = tuple(float(u) for u in times)
        if len(times) < 2:
            raise InvalidParameter("a partition needs at least two points")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidParameter("partition times must be strictly increasing")
        self.times = times

    @classmethod
    def uniform(cls, s, t, n):
        return cls(np.linspace(s, t, n + 1))

    @property
    def s(self):
        return self.times[0]

    @property
    def t(self):
        return self.times[-1]

    def n_intervals(self):
        return len(self.times) - 1

    def steps(self):
        return [b - a for a, b in zip(self.times, self.times[1:])]

    def mesh(self):
        return max(self.steps())

    def refines(self, other, tol=1e-12):
        """True if self contains all points of other (up to tol)."""
        mine = self.times
        return all(min(abs(u - v) for v in mine) <= tol for u in other.times)

    def common_refinement(self, other, tol=1e-12):
        pts = sorted(set(self.times) | set(other.times))
        merged = [pts[0]]
        for u in pts[1:]:
            if u - merged[-1] > tol:
                merged.append(u)
        return Partition(merged)

    def __repr__(self):
        return f"Partition({list(self.times)})"
