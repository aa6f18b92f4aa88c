"""Markov-parameter estimation from partially observed trajectories.

Each state coordinate i contributes one row of G = [B, AB, ..., A^d B]. That row
is fit by least squares over exactly the trajectories that measure i, so the
normal equations split into one small system per coordinate. Coordinates
measured by the same set of trajectories share a Gram matrix, so each
distinct set is factored only once.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from . import _kernels
from ._linalg import hankel_from_blocks, truncated_pinv
from .errors import (
    DimensionError,
    InsufficientExcitationError,
    PreconditionError,
    RankDeficiencyError,
)
from .linsys import simulate_trajectory
from .measurement import CoverageStats, Schedule, coverage

log = logging.getLogger(__name__)

COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class MarkovEstimate:
    d: int
    m: int
    r: int
    blocks: np.ndarray          # (d + 1, r, m); unmeasured rows are zero
    measured: tuple             # 1-based coordinates with estimated rows
    stats: CoverageStats = field(default=None)
    T: int = 0

    @property
    def G(self):
        """The r x m(d+1) matrix [G_0, ..., G_d]."""
        return np.hstack(list(self.blocks))

    @property
    def s_min(self):
        return self.stats.s_min if self.stats is not None else 0

    @property
    def s_max(self):
        return self.stats.s_max if self.stats is not None else 0

    @property
    def unestimated(self):
        return tuple(i for i in range(1, self.r + 1) if i not in set(self.measured))

    @classmethod
    def from_blocks(cls, blocks, measured=None, T=0, s_min=0, s_max=0):
        """Wrap known Markov blocks (e.g. exact ones) as an estimate."""
        blocks = np.array(blocks, dtype=float)
        d, r, m = blocks.shape[0] - 1, blocks.shape[1], blocks.shape[2]
        measured = tuple(range(1, r + 1)) if measured is None else tuple(sorted(measured))
        counts = np.zeros(r, dtype=int)
        counts[np.array(measured, dtype=int) - 1] = s_min
        mask = np.zeros(r, dtype=bool)
        mask[np.array(measured, dtype=int) - 1] = True
        blocks[:, ~mask, :] = 0.0
        return cls(d, m, r, blocks, measured, CoverageStats(counts, measured, s_min, s_max), T)

    def to_dict(self):
        return {
            "d": self.d,
            "m": self.m,
            "r": self.r,
            "measured": list(self.measured),
            "s_min": self.s_min,
            "s_max": self.s_max,
            "T": self.T,
            "blocks": [b.ravel().tolist() for b in self.blocks],
        }

    @classmethod
    def from_dict(cls, data):
        d, m, r = int(data["d"]), int(data["m"]), int(data["r"])
        blocks = np.array([np.reshape(b, (r, m)) for b in data["blocks"]], dtype=float)
        if blocks.shape != (d + 1, r, m):
            raise DimensionError("blocks do not match d, r, m")
        return cls.from_blocks(blocks, data["measured"], int(data.get("T", 0)),
                               int(data.get("s_min", 0)), int(data.get("s_max", 0)))


@dataclass(frozen=True, eq=False)
class RecoveredSystem:
    A_hat: np.ndarray
    B_hat: np.ndarray
    rank_used: int
    similarity: str                 # "coordinate-exact" or "up-to-similarity"
    C_hat: np.ndarray = None        # rows J of the realized output map (Ho-Kalman only)

    def to_dict(self):
        r, m = self.B_hat.shape
        out = {
            "r": r,
            "m": m,
            "A": self.A_hat.ravel().tolist(),
            "B": self.B_hat.ravel().tolist(),
            "rank_used": self.rank_used,
            "similarity": self.similarity,
        }
        if self.C_hat is not None:
            out["C"] = self.C_hat.ravel().tolist()
            out["C_rows"] = self.C_hat.shape[0]
        return out


def build_regressor(traj, d, t):
    """Stack [u_t; u_{t-1}; ...; u_{t-d}]."""
    if not d <= t <= traj.T:
        raise PreconditionError(f"need d <= t <= T, got d={d}, t={t}, T={traj.T}")
    return traj.inputs[t - d:t + 1][::-1].reshape(-1)


def _trajectory_terms(traj, d):
    u = np.ascontiguousarray(traj.inputs)
    y = np.ascontiguousarray(traj.observations)
    return _kernels.gram(u, d), _kernels.cross(y, u, d)


def _solve_rows(gram, rhs, coordinate):
    """Solve X @ gram = rhs for X (rows of G); gram is symmetric PSD."""
    c, info = lapack.dpotrf(gram, lower=0)
    if info == 0:
        anorm = np.abs(gram).sum(axis=0).max()
        rcond, _ = lapack.dpocon(c, anorm, uplo="U")
        if rcond > 1.0 / COND_LIMIT:
            return scipy.linalg.cho_solve((c, False), rhs.T).T
    # ill-conditioned or indefinite in floating point: SVD path
    U, s, Vt = np.linalg.svd(gram)
    tol = gram.shape[0] * np.finfo(float).eps * s[0]
    if s[-1] <= tol:
        raise InsufficientExcitationError(coordinate)
    log.warning("Gram matrix for coordinate %s ill-conditioned, using SVD solve", coordinate)
    return ((rhs @ Vt.T) / s) @ U.T


def estimate_markov(schedule, trajectories, d, threads=1):
    """Row-wise least-squares estimate of [B, AB, ..., A^d B]."""
    if len(trajectories) != len(schedule.matrices):
        raise PreconditionError("one trajectory per schedule matrix is required")
    if not trajectories:
        raise PreconditionError("no trajectories")
    T = trajectories[0].T
    m = trajectories[0].inputs.shape[1]
    r = schedule.r
    for traj, M in zip(trajectories, schedule.matrices):
        if traj.T != T:
            raise PreconditionError("all trajectories must share the horizon T")
        if traj.measurement.coords != M.coords:
            raise PreconditionError("trajectory measurement does not match the schedule")
    if T <= d:
        raise PreconditionError(f"horizon T={T} must exceed d={d}")

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            terms = list(pool.map(lambda tr: _trajectory_terms(tr, d), trajectories))
    else:
        terms = [_trajectory_terms(tr, d) for tr in trajectories]

    # group coordinates by the set of trajectories measuring them
    groups = {}
    for k, M in enumerate(schedule.matrices):
        for c in M.coords:
            groups.setdefault(c, []).append(k)
    by_set = {}
    for c in sorted(groups):
        by_set.setdefault(tuple(groups[c]), []).append(c)

    G = np.zeros((r, m * (d + 1)))
    for ks, coords in by_set.items():
        gram = terms[ks[0]][0].copy()
        for k in ks[1:]:
            gram += terms[k][0]
        rhs = np.zeros((len(coords), m * (d + 1)))
        for row, c in enumerate(coords):
            for k in ks:
                rhs[row] += terms[k][1][schedule.matrices[k].coords.index(c)]
        G[np.array(coords) - 1] = _solve_rows(gram, rhs, coords[0])

    stats = coverage(schedule)
    blocks = G.reshape(r, d + 1, m).transpose(1, 0, 2).copy()
    return MarkovEstimate(d, m, r, blocks, stats.measured, stats, T)


def estimate_markov_global(schedule, trajectories, d):
    """Single stacked least-squares solve; a slow reference for the row-wise path."""
    T = trajectories[0].T
    m = trajectories[0].inputs.shape[1]
    r = schedule.r
    measured = coverage(schedule).measured
    col = {c: j for j, c in enumerate(measured)}
    p = m * (d + 1)
    rows, targets = [], []
    for traj, M in zip(trajectories, schedule.matrices):
        U = np.array([build_regressor(traj, d, t) for t in range(d, T + 1)])
        for ch, c in enumerate(M.coords):
            # y_{k,t+1}[ch] = G[c] . U_t  -> unknown vector vec(G_measured)
            X = np.zeros((U.shape[0], len(measured) * p))
            X[:, col[c] * p:(col[c] + 1) * p] = U
            rows.append(X)
            targets.append(traj.observations[d + 1:T + 2, ch])
    X = np.vstack(rows)
    y = np.concatenate(targets)
    sol, *_ = np.linalg.lstsq(X, y, rcond=None)
    G = np.zeros((r, p))
    G[np.array(measured) - 1] = sol.reshape(len(measured), p)
    return G.reshape(r, d + 1, m).transpose(1, 0, 2)


def markov_error(est, truth, rows=None):
    """Spectral norm of the row-restricted difference between estimate and truth."""
    truth = np.asarray(truth, dtype=float)
    if truth.shape[0] < est.d + 1 or truth.shape[1:] != (est.r, est.m):
        raise DimensionError("truth blocks do not match the estimate")
    rows = est.measured if rows is None else tuple(rows)
    outside = set(rows) - set(est.measured)
    if outside:
        raise PreconditionError(f"rows {sorted(outside)} were not estimated")
    idx = np.array(rows, dtype=int) - 1
    diff = est.blocks - truth[: est.d + 1]
    D = np.hstack(list(diff[:, idx, :]))
    return float(np.linalg.norm(D, 2)) if D.size else 0.0


def recover_ab(est, rank_tol=1e-10):
    """A_hat = G+ pinv(G-), B_hat = first block of G-."""
    r, m, d = est.r, est.m, est.d
    if d < r:
        raise PreconditionError(f"recovery needs d >= r, got d={d}, r={r}")
    if len(est.measured) != r:
        raise PreconditionError(f"rows {list(est.unestimated)} were not estimated")
    G = est.G
    G_minus = G[:, : m * d]
    G_plus = G[:, m: m * (d + 1)]
    pinv, rank = truncated_pinv(G_minus, rank_tol)
    if rank < r:
        raise RankDeficiencyError(
            f"[B, ..., A^(d-1)B] estimate has numerical rank {rank} < r={r}; "
            "system uncontrollable or estimate too noisy"
        )
    A_hat = G_plus @ pinv
    B_hat = G_minus[:, :m].copy()
    return RecoveredSystem(A_hat, B_hat, rank, "coordinate-exact")


def ho_kalman(est, r, rows=None, rank_tol=1e-10, gap_factor=10.0):
    """Realize (A, B) up to similarity from the estimated rows ``rows`` of G.

    ``gap_factor`` is the minimum accepted ratio sigma_r / sigma_{r+1} of the
    Hankel matrix's singular values.
    """
    m, d = est.m, est.d
    rows = est.measured if rows is None else tuple(sorted(rows))
    if d < 2 * r - 1:
        raise PreconditionError(f"Ho-Kalman needs d >= 2r-1 = {2 * r - 1}, got d={d}")
    missing = set(rows) - set(est.measured)
    if missing:
        raise PreconditionError(f"rows {sorted(missing)} were not estimated")
    H = hankel_from_blocks(est.blocks, np.array(rows) - 1, r)
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    if s.size < r or s[0] == 0.0 or s[r - 1] <= rank_tol * s[0]:
        raise RankDeficiencyError(f"Hankel matrix has numerical rank below r={r}")
    tail = s[r] if s.size > r else 0.0
    if tail > 0 and s[r - 1] / tail < gap_factor:
        raise RankDeficiencyError(
            f"Hankel singular value gap sigma_r/sigma_r+1 = {s[r - 1] / tail:.3g} "
            f"below {gap_factor}; accessible rows may not render the system observable"
        )
    root = np.sqrt(s[:r])
    R = root[:, None] * Vt[:r]
    R_minus = R[:, : r * m]
    R_plus = R[:, m:(r + 1) * m]
    pinv, rank = truncated_pinv(R_minus, rank_tol)
    A_hat = R_plus @ pinv
    B_hat = R_minus[:, :m].copy()
    C_hat = (U[: len(rows), :r] * root)
    return RecoveredSystem(A_hat, B_hat, rank, "up-to-similarity", C_hat)


def collect(model, schedule, T, seed, threads=1):
    """Simulate one trajectory per schedule matrix."""
    jobs = list(enumerate(schedule.matrices))
    run = lambda job: simulate_trajectory(model, job[1], T, seed, index=job[0])  # noqa: E731
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def identify(model, schedule, T, d, seed, threads=1):
    """Collect data under ``schedule`` and estimate Markov parameters."""
    if not isinstance(schedule, Schedule):
        raise TypeError("schedule must be a Schedule")
    trajectories = collect(model, schedule, T, seed, threads)
    return estimate_markov(schedule, trajectories, d, threads)
