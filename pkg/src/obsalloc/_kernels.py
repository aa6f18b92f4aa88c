"""Hot numeric loops, compiled with numba when available.

Set ``OBSALLOC_DISABLE_NUMBA=1`` to force the pure-numpy implementations.
Both paths compute the same quantities; tests compare them directly.
"""

import os

import numpy as np

_DISABLED = os.environ.get("OBSALLOC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# numpy reference path
# --------------------------------------------------------------------------

def simulate_states_numpy(A, drive):
    n_steps, r = drive.shape
    x = np.zeros((n_steps + 1, r))
    At = np.ascontiguousarray(A.T)
    for t in range(n_steps):
        x[t + 1] = x[t] @ At + drive[t]
    return x


def lagged_products_numpy(u, maxlag):
    n, m = u.shape
    out = np.empty((maxlag + 1, m, m))
    for lag in range(maxlag + 1):
        out[lag] = u[lag:].T @ u[: n - lag]
    return out


def gram_numpy(u, d):
    """Sum over t in [d, T] of U_t U_t^T with U_t = [u_t; ...; u_{t-d}]."""
    n, m = u.shape
    T = n - 1
    lags = lagged_products_numpy(u, d)
    out = np.empty((m * (d + 1), m * (d + 1)))
    for a in range(d + 1):
        for b in range(a + 1):
            lag = a - b
            # sum_{s=d-a}^{T-a} u_{s+lag} u_s^T, from the full-range lag sum
            blk = lags[lag].copy()
            head = d - a
            if head > 0:
                blk -= u[lag:lag + head].T @ u[:head]
            if b > 0:
                lo = T - a + 1
                blk -= u[lo + lag:T + 1].T @ u[lo:T + 1 - lag]
            # block (a, b) = sum_t u_{t-a} u_{t-b}^T = blk^T
            out[a * m:(a + 1) * m, b * m:(b + 1) * m] = blk.T
            out[b * m:(b + 1) * m, a * m:(a + 1) * m] = blk
    return out


def cross_numpy(y, u, d):
    """Sum over t in [d, T] of y_{t+1} U_t^T, one row per observed channel."""
    n, m = u.shape
    T = n - 1
    target = y[d + 1:T + 2]
    out = np.empty((y.shape[1], m * (d + 1)))
    for b in range(d + 1):
        out[:, b * m:(b + 1) * m] = target.T @ u[d - b:T + 1 - b]
    return out


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def simulate_states_numba(A, drive):
        n_steps, r = drive.shape
        x = np.zeros((n_steps + 1, r))
        for t in range(n_steps):
            for i in range(r):
                acc = drive[t, i]
                for j in range(r):
                    acc += A[i, j] * x[t, j]
                x[t + 1, i] = acc
        return x

    @njit(cache=True)
    def _lagged_products_numba(u, maxlag):
        n, m = u.shape
        out = np.empty((maxlag + 1, m, m))
        for lag in range(maxlag + 1):
            lead = np.ascontiguousarray(u[lag:].T)
            out[lag] = np.dot(lead, u[: n - lag])
        return out

    @njit(cache=True)
    def gram_numba(u, d):
        n, m = u.shape
        T = n - 1
        lags = _lagged_products_numba(u, d)
        size = m * (d + 1)
        out = np.empty((size, size))
        for a in range(d + 1):
            for b in range(a + 1):
                lag = a - b
                blk = lags[lag].copy()
                for s in range(d - a):
                    for i in range(m):
                        ui = u[s + lag, i]
                        for j in range(m):
                            blk[i, j] -= ui * u[s, j]
                for s in range(T - a + 1, T - lag + 1):
                    for i in range(m):
                        ui = u[s + lag, i]
                        for j in range(m):
                            blk[i, j] -= ui * u[s, j]
                for i in range(m):
                    for j in range(m):
                        out[a * m + j, b * m + i] = blk[i, j]
                        out[b * m + i, a * m + j] = blk[i, j]
        return out

    @njit(cache=True)
    def cross_numba(y, u, d):
        n, m = u.shape
        T = n - 1
        p = y.shape[1]
        out = np.zeros((p, m * (d + 1)))
        for t in range(d, T + 1):
            for b in range(d + 1):
                for c in range(p):
                    yc = y[t + 1, c]
                    for j in range(m):
                        out[c, b * m + j] += yc * u[t - b, j]
        return out

    simulate_states = simulate_states_numba
    gram = gram_numba
    cross = cross_numba
else:
    simulate_states = simulate_states_numpy
    gram = gram_numpy
    cross = cross_numpy
