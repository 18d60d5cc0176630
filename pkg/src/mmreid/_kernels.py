"""Compiled inner loops.

Each output cell is produced by exactly one thread with a fixed operation
order, so results do not depend on the thread count.
"""
import math
import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "omp"

# Columns per tile in the min-plus product; one tile of the running minimum
# and its argmin stays resident in L1/L2 while bridge rows stream past.
MINPLUS_BLOCK = 1024


def configure_threads(n=None):
    """Cap worker threads. ``n=None`` reads ``MMREID_THREADS``."""
    if n is None:
        env = os.environ.get("MMREID_THREADS")
        if not env:
            return numba.get_num_threads()
        n = int(env)
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def thread_count():
    return numba.get_num_threads()


configure_threads()


@njit(parallel=True, cache=True)
def _euclidean_rows(X, YT, out):
    n, D = X.shape
    m = YT.shape[1]
    for i in prange(n):
        acc = out[i]
        for j in range(m):
            acc[j] = 0.0
        # sum runs over coordinates in ascending order for every cell
        for d in range(D):
            x = X[i, d]
            row = YT[d]
            for j in range(m):
                t = x - row[j]
                acc[j] += t * t
        for j in range(m):
            acc[j] = math.sqrt(acc[j])


def euclidean_matrix(X, Y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    YT = np.ascontiguousarray(np.asarray(Y, dtype=np.float64).T)
    out = np.empty((X.shape[0], YT.shape[1]), dtype=np.float64)
    _euclidean_rows(X, YT, out)
    return out


@njit(parallel=True, cache=True)
def _minplus_rows(A, B, out, arg, block):
    n, k = A.shape
    m = B.shape[1]
    for i in prange(n):
        for j0 in range(0, m, block):
            j1 = min(j0 + block, m)
            o = out[i, j0:j1]
            g = arg[i, j0:j1]
            for j in range(j1 - j0):
                o[j] = np.inf
                g[j] = 0
            for t in range(k):
                a = A[i, t]
                brow = B[t, j0:j1]
                for j in range(j1 - j0):
                    v = a + brow[j]
                    # strict comparison keeps the smallest t on ties
                    if v < o[j]:
                        o[j] = v
                        g[j] = t


def minplus(A, B, block=MINPLUS_BLOCK):
    """Return ``(C, T)`` with ``C[i, j] = min_t A[i, t] + B[t, j]`` and the
    smallest minimizing ``t`` in ``T``."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    out = np.empty((A.shape[0], B.shape[1]), dtype=np.float64)
    arg = np.empty((A.shape[0], B.shape[1]), dtype=np.int64)
    _minplus_rows(A, B, out, arg, int(block))
    return out, arg
