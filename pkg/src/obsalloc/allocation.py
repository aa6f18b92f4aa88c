"""Greedy sensor allocation driven by a thresholded rank estimate.

Two estimators are available: ``direct`` forms the observability matrix of
an estimated A, and ``hankel`` forms a block Hankel matrix from estimated Markov
rows. The hankel estimator only needs rows of G for the accessible coordinates.
"""

from dataclasses import dataclass, field

import numpy as np

from ._linalg import hankel_from_blocks, observability_from_rows, singular_values
from .errors import NotObservableWithinCandidates, PreconditionError
from .measurement import MeasurementMatrix


def default_threshold(s_min, T):
    """Fourth root of 1 / (s_min * T)."""
    if s_min < 1 or T < 1:
        raise PreconditionError("default threshold needs s_min >= 1 and T >= 1")
    return (1.0 / (s_min * T)) ** 0.25


def observability_matrix(A, C):
    """[C; CA; ...; CA^(r-1)] as a dense (|C| r) x r array."""
    A = np.asarray(A, dtype=float)
    if len(C) == 0:
        raise PreconditionError("observability matrix of an empty measurement")
    if C.r != A.shape[0]:
        raise PreconditionError(f"measurement has r={C.r}, A is {A.shape}")
    return observability_from_rows(A, C.indices)


def hankel_matrix(blocks, C, available=None):
    """Block Hankel matrix with block (i, j) = C G_{i+j}, i < r, j <= r.

    ``blocks`` is a (d + 1, r, m) array; ``available`` optionally lists the
    1-based rows that were actually estimated.
    """
    blocks = np.asarray(blocks, dtype=float)
    r = blocks.shape[1]
    if blocks.shape[0] < 2 * r:
        raise PreconditionError(f"Hankel matrix needs d >= 2r-1 = {2 * r - 1}, got d={blocks.shape[0] - 1}")
    if available is not None:
        missing = set(C.coords) - set(available)
        if missing:
            raise PreconditionError(f"rows {sorted(missing)} were not estimated")
    return hankel_from_blocks(blocks, C.indices, r)


@dataclass(frozen=True, eq=False)
class RankEstimator:
    """Counts singular values strictly above ``threshold``.

    Build with :meth:`direct` or :meth:`hankel`.
    """

    variant: str
    r: int
    threshold: float
    A_hat: np.ndarray = None
    blocks: np.ndarray = None
    accessible: tuple = None
    s_min: int = 0
    T: int = 0

    def __post_init__(self):
        if self.variant not in ("direct", "hankel"):
            raise PreconditionError(f"unknown estimator variant {self.variant!r}")
        if not self.threshold > 0:
            raise PreconditionError("threshold must be positive")

    @classmethod
    def direct(cls, A_hat, threshold=None, s_min=0, T=0):
        A_hat = np.asarray(A_hat, dtype=float)
        if threshold is None:
            threshold = default_threshold(s_min, T)
        return cls("direct", A_hat.shape[0], float(threshold), A_hat=A_hat, s_min=s_min, T=T)

    @classmethod
    def hankel(cls, est, accessible=None, threshold=None):
        """From a MarkovEstimate; ``accessible`` defaults to its measured rows."""
        if est.d < 2 * est.r - 1:
            raise PreconditionError(f"hankel estimator needs d >= 2r-1 = {2 * est.r - 1}, got {est.d}")
        accessible = tuple(est.measured if accessible is None else sorted(accessible))
        missing = set(accessible) - set(est.measured)
        if missing:
            raise PreconditionError(f"rows {sorted(missing)} were not estimated")
        if threshold is None:
            threshold = default_threshold(est.s_min, est.T)
        return cls("hankel", est.r, float(threshold), blocks=est.blocks, accessible=accessible,
                   s_min=est.s_min, T=est.T)

    def matrix(self, C):
        if self.variant == "direct":
            return observability_matrix(self.A_hat, C)
        outside = set(C.coords) - set(self.accessible)
        if outside:
            raise PreconditionError(f"coordinates {sorted(outside)} are outside the accessible set")
        return hankel_matrix(self.blocks, C)

    def rank(self, C):
        if len(C) == 0:
            return 0
        s = singular_values(self.matrix(C))
        return int(np.count_nonzero(s > self.threshold))


def estimate_rank(estimator, C):
    return estimator.rank(C)


@dataclass
class GreedyStep:
    selected: int
    rank: int
    gains: dict = field(default_factory=dict)


@dataclass
class AllocationResult:
    allocation: MeasurementMatrix
    trace: list
    achieved_rank: int

    @property
    def n_hat(self):
        return len(self.allocation)

    @property
    def coords(self):
        return self.allocation.coords

    def to_dict(self):
        return {
            "coords": list(self.allocation.coords),
            "n_hat": self.n_hat,
            "achieved_rank": self.achieved_rank,
            "trace": [
                {"selected": st.selected, "rank": st.rank,
                 "gains": {str(k): v for k, v in sorted(st.gains.items())}}
                for st in self.trace
            ],
        }

    def dense(self):
        return self.allocation.dense()


def greedy_allocate(estimator, candidates=None, r=None, lazy=False):
    """Add the candidate with the largest estimated rank gain until rank r is reached.

    Ties go to the smallest coordinate. With ``lazy=True`` gains from earlier
    rounds serve as upper bounds and a candidate is only re-evaluated when its
    bound could still win.
    """
    r = estimator.r if r is None else r
    candidates = tuple(range(1, r + 1)) if candidates is None else tuple(sorted(set(candidates)))
    if not candidates:
        raise PreconditionError("candidate set is empty")
    if estimator.variant == "hankel":
        outside = set(candidates) - set(estimator.accessible)
        if outside:
            raise PreconditionError(f"candidates {sorted(outside)} are outside the accessible set")

    C = MeasurementMatrix(r)
    rank = 0
    trace = []
    bounds = {i: np.inf for i in candidates}
    while rank < r:
        pool = [i for i in candidates if i not in C.coords]
        gains = {}
        if lazy:
            best, best_gain = None, -1
            for i in sorted(pool, key=lambda i: (-bounds[i], i)):
                if best is not None and (bounds[i] < best_gain or (bounds[i] == best_gain and i > best)):
                    break
                g = estimator.rank(C.with_coord(i)) - rank
                gains[i] = g
                bounds[i] = g
                if g > best_gain or (g == best_gain and i < best):
                    best, best_gain = i, g
        else:
            for i in pool:
                gains[i] = estimator.rank(C.with_coord(i)) - rank
            best = None
            best_gain = -1
            for i in pool:
                if gains[i] > best_gain:
                    best, best_gain = i, gains[i]
        if best is None or best_gain <= 0:
            raise NotObservableWithinCandidates(
                f"estimated rank {rank} < {r} and no candidate increases it "
                f"(allocation so far: {list(C.coords)})"
            )
        C = C.with_coord(best)
        rank += best_gain
        trace.append(GreedyStep(best, rank, gains))
    return AllocationResult(C, trace, rank)
