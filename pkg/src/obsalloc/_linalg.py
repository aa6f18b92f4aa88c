"""Small dense linear-algebra helpers shared across modules."""

import numpy as np


def singular_values(M):
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def numerical_rank(M, rel_tol=None):
    """Count singular values above ``rel_tol * sigma_max``.

    The default relative tolerance is ``max(M.shape) * eps``.
    """
    s = singular_values(M)
    if s.size == 0 or s[0] == 0.0:
        return 0
    if rel_tol is None:
        rel_tol = max(np.shape(M)) * np.finfo(float).eps
    return int(np.count_nonzero(s > rel_tol * s[0]))


def truncated_pinv(M, rel_tol):
    """Pseudo-inverse via SVD, dropping singular values below ``rel_tol * sigma_max``.

    Returns ``(pinv, rank)``.
    """
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(M.shape[::-1]), 0
    keep = s > rel_tol * s[0]
    k = int(np.count_nonzero(keep))
    pinv = (Vt[:k].T / s[:k]) @ U[:, :k].T
    return pinv, k


def hankel_from_blocks(blocks, rows, r):
    """Block Hankel matrix with block (i, j) = blocks[i + j][rows, :].

    ``blocks`` has shape (d + 1, n_rows, m) with d >= 2r - 1; ``rows`` are
    0-based row indices into each block. The result is (len(rows) * r) x (m * (r + 1)).
    """
    blocks = np.asarray(blocks)
    m = blocks.shape[2]
    rows = np.asarray(rows, dtype=int)
    p = rows.size
    H = np.empty((p * r, m * (r + 1)))
    sub = blocks[: 2 * r, :, :][:, rows, :]
    for i in range(r):
        for j in range(r + 1):
            H[i * p:(i + 1) * p, j * m:(j + 1) * m] = sub[i + j]
    return H


def observability_from_rows(A, rows, horizon=None):
    """Stack [C; CA; ...; CA^{horizon-1}] for the one-hot C selecting ``rows`` (0-based)."""
    A = np.asarray(A, dtype=float)
    r = A.shape[0]
    horizon = r if horizon is None else horizon
    rows = np.asarray(rows, dtype=int)
    p = rows.size
    O = np.empty((p * horizon, r))
    cur = np.eye(r)[rows]
    for i in range(horizon):
        O[i * p:(i + 1) * p] = cur
        cur = cur @ A
    return O
