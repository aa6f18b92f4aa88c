"""Measurement matrices, cyclic data-collection schedules and coverage statistics.

Coordinates are 1-based everywhere in this module's public surface; the
``indices`` property gives the 0-based form used for array slicing.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError


@dataclass(frozen=True)
class MeasurementMatrix:
    """A matrix whose rows are distinct one-hot vectors, stored as coordinates."""

    r: int
    coords: tuple = ()

    def __post_init__(self):
        coords = tuple(int(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        if self.r < 1:
            raise PreconditionError(f"state dimension must be positive, got {self.r}")
        if len(set(coords)) != len(coords):
            raise PreconditionError(f"duplicate coordinates in {coords}")
        bad = [c for c in coords if not 1 <= c <= self.r]
        if bad:
            raise PreconditionError(f"coordinates {bad} outside [1, {self.r}]")

    def __len__(self):
        return len(self.coords)

    @property
    def indices(self):
        return np.array(self.coords, dtype=int) - 1

    def dense(self):
        M = np.zeros((len(self.coords), self.r))
        if self.coords:
            M[np.arange(len(self.coords)), self.indices] = 1.0
        return M

    def with_coord(self, i):
        return MeasurementMatrix(self.r, self.coords + (int(i),))

    @classmethod
    def full(cls, r):
        return cls(r, tuple(range(1, r + 1)))


@dataclass(frozen=True)
class Schedule:
    matrices: tuple
    r: int
    n_bar: int
    s: int
    accessible: tuple = None

    @property
    def K(self):
        return len(self.matrices)

    def to_dict(self):
        out = {
            "r": self.r,
            "n_bar": self.n_bar,
            "s": self.s,
            "matrices": [list(M.coords) for M in self.matrices],
        }
        if self.accessible is not None:
            out["accessible"] = list(self.accessible)
        return out

    @classmethod
    def from_dict(cls, data):
        r = int(data["r"])
        mats = tuple(MeasurementMatrix(r, tuple(c)) for c in data["matrices"])
        acc = data.get("accessible")
        return cls(mats, r, int(data["n_bar"]), int(data["s"]),
                   tuple(acc) if acc is not None else None)


@dataclass(frozen=True)
class CoverageStats:
    counts: np.ndarray = field(compare=False)
    measured: tuple
    s_min: int
    s_max: int


def cyclic_schedule(r, n_bar, s):
    """Sensors on n_bar consecutive coordinates per trajectory, wrapping mod r."""
    return cyclic_schedule_restricted(r, tuple(range(1, r + 1)), n_bar, s, _full=True)


def cyclic_schedule_restricted(r, accessible, n_bar, s, _full=False):
    """Cycle n_bar sensors over the accessible coordinates only."""
    J = tuple(int(j) for j in accessible)
    if not J:
        raise PreconditionError("accessible set is empty")
    if len(set(J)) != len(J) or any(not 1 <= j <= r for j in J):
        raise PreconditionError(f"accessible coordinates must be distinct and in [1, {r}]")
    if n_bar < 1:
        raise PreconditionError(f"n_bar must be at least 1, got {n_bar}")
    if n_bar > len(J):
        raise PreconditionError(f"n_bar={n_bar} exceeds the {len(J)} available coordinates")
    if s < 1:
        raise PreconditionError(f"repetition s must be at least 1, got {s}")
    size = len(J)
    K = math.ceil(s * size / n_bar)
    mats = tuple(
        MeasurementMatrix(r, tuple(J[a % size] for a in range(k * n_bar, (k + 1) * n_bar)))
        for k in range(K)
    )
    return Schedule(mats, r, n_bar, s, None if _full else J)


def coverage(schedule):
    counts = np.zeros(schedule.r, dtype=int)
    for M in schedule.matrices:
        counts[M.indices] += 1
    nz = counts[counts > 0]
    measured = tuple(int(i) + 1 for i in np.flatnonzero(counts))
    if nz.size == 0:
        return CoverageStats(counts, measured, 0, 0)
    return CoverageStats(counts, measured, int(nz.min()), int(nz.max()))
