"""Brute-force references: exact observability ranks, minimal sensor sets, power perturbation bound."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.sparse.csgraph import connected_components

from ._linalg import numerical_rank, observability_from_rows
from .errors import NotObservableWithinCandidates, SearchSpaceTooLarge

MAX_CANDIDATES = 20


@dataclass(frozen=True)
class MinimalAllocation:
    n_star: int
    witness: tuple          # 1-based coordinates
    search_space: str       # "all" or "restricted"


def _rows(C):
    if hasattr(C, "indices"):
        return C.indices
    return np.array(list(C), dtype=int) - 1


def exact_observability_rank(A, C, rel_tol=1e-9):
    """Numerical rank of [C; CA; ...; CA^(r-1)]; 0 for an empty C.

    ``C`` is a MeasurementMatrix or an iterable of 1-based coordinates.
    """
    rows = _rows(C)
    if rows.size == 0:
        return 0
    return numerical_rank(observability_from_rows(A, rows), rel_tol)


def decoupled_blocks(A):
    """Groups of 0-based coordinates that A never couples (connected components)."""
    A = np.asarray(A)
    pattern = (A != 0) | (A.T != 0)
    n, labels = connected_components(pattern, directed=False)
    return [np.flatnonzero(labels == k) for k in range(n)]


def _search(A, candidates, r, rel_tol):
    """Smallest, then lexicographically first, subset of ``candidates`` (0-based) reaching rank r."""
    for size in range(1, len(candidates) + 1):
        for subset in combinations(candidates, size):
            if numerical_rank(observability_from_rows(A, subset), rel_tol) == r:
                return subset
    return None


def minimal_sensor_count(A, candidates=None, rel_tol=1e-9, prune=True,
                         max_candidates=MAX_CANDIDATES):
    """Exhaustive minimum number of sensors rendering (A, C) observable.

    With ``prune`` the search runs separately on each decoupled block of A,
    which is exact for block-diagonal A.
    """
    A = np.asarray(A, dtype=float)
    r = A.shape[0]
    restricted = candidates is not None and set(candidates) != set(range(1, r + 1))
    cand = sorted(range(r) if candidates is None else (int(c) - 1 for c in candidates))
    space = "restricted" if restricted else "all"

    parts = decoupled_blocks(A) if prune else [np.arange(r)]
    witness = []
    for part in parts:
        local = {int(g): k for k, g in enumerate(part)}
        sub_cand = [local[c] for c in cand if c in local]
        if len(sub_cand) > max_candidates:
            raise SearchSpaceTooLarge(
                f"{len(sub_cand)} candidates in one block exceeds the cap of {max_candidates}"
            )
        A_sub = A[np.ix_(part, part)]
        found = _search(A_sub, sub_cand, len(part), rel_tol)
        if found is None:
            raise NotObservableWithinCandidates(
                f"no subset of the candidates observes coordinates {[int(g) + 1 for g in part]}"
            )
        witness.extend(int(part[k]) + 1 for k in found)
    witness = tuple(sorted(witness))
    return MinimalAllocation(len(witness), witness, space)


def power_perturbation_bound(psi_A, rho_A, delta_norm, n):
    ratio = psi_A / rho_A
    return n * ratio ** 2 * (rho_A + ratio * delta_norm) ** (n - 1) * delta_norm


def power_perturbation_check(A, Delta, psi_A, rho_A, n, slack=1e-12):
    """Whether ||(A + Delta)^n - A^n|| stays within the perturbation bound (spectral norms)."""
    A = np.asarray(A, dtype=float)
    Delta = np.asarray(Delta, dtype=float)
    lhs = np.linalg.norm(np.linalg.matrix_power(A + Delta, n) - np.linalg.matrix_power(A, n), 2)
    rhs = power_perturbation_bound(psi_A, rho_A, np.linalg.norm(Delta, 2), n)
    return bool(lhs <= rhs + slack)
