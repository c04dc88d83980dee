"""Triangle and Kalmanson inequality constraints on boundary resistance distances.

Both families are generated over boundary index tuples that contain at least
one unavailable boundary node; tuples made only of available nodes carry
measured data and are therefore not constraints on anything.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .netcore import MeasurementSet, RdnetError


class MissingEntry(RdnetError):
    """A constraint refers to an index beyond the supplied distance matrix."""


@dataclass(frozen=True)
class TriangleConstraint:
    """Residual r_ij + r_jk - r_ik >= 0 for boundary nodes i < j < k."""

    i: int
    j: int
    k: int

    def indices(self):
        return (self.i, self.j, self.k)

    def residual(self, R: np.ndarray) -> float:
        i, j, k = self.i - 1, self.j - 1, self.k - 1
        return R[i, j] + R[j, k] - R[i, k]


@dataclass(frozen=True)
class KalmansonConstraint:
    """One of the two circular four-point residuals for i < j < k < l.

    form 1: (r_ik + r_jl) - (r_ij + r_kl) >= 0
    form 2: (r_ik + r_jl) - (r_jk + r_il) >= 0
    """

    i: int
    j: int
    k: int
    l: int
    form: int

    def indices(self):
        return (self.i, self.j, self.k, self.l)

    def residual(self, R: np.ndarray) -> float:
        i, j, k, l = self.i - 1, self.j - 1, self.k - 1, self.l - 1
        lhs = R[i, k] + R[j, l]
        if self.form == 1:
            return lhs - (R[i, j] + R[k, l])
        return lhs - (R[j, k] + R[i, l])


def _qualifies(indices, unavailable) -> bool:
    return any(a in unavailable for a in indices)


def generate_triangle(ms: MeasurementSet) -> tuple:
    """All admissible triangle constraints, lexicographically ordered."""
    unavailable = set(ms.unavailable_boundary)
    out = []
    for i, j, k in combinations(range(1, ms.n_b + 1), 3):
        if _qualifies((i, j, k), unavailable):
            out.append(TriangleConstraint(i, j, k))
    return tuple(out)


def generate_kalmanson(ms: MeasurementSet) -> tuple:
    """Both residual forms for every admissible boundary quadruple."""
    unavailable = set(ms.unavailable_boundary)
    out = []
    for i, j, k, l in combinations(range(1, ms.n_b + 1), 4):
        if _qualifies((i, j, k, l), unavailable):
            out.append(KalmansonConstraint(i, j, k, l, 1))
            out.append(KalmansonConstraint(i, j, k, l, 2))
    return tuple(out)


def evaluate(R: np.ndarray, cs) -> np.ndarray:
    """Residual vector of the given constraints on a full distance matrix."""
    n = R.shape[0]
    residuals = np.empty(len(cs))
    for idx, c in enumerate(cs):
        if max(c.indices()) > n:
            raise MissingEntry(
                f"constraint {c} needs index {max(c.indices())} but matrix is {n}x{n}"
            )
        residuals[idx] = c.residual(R)
    return residuals
