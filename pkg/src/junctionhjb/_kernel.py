"""Jacobi sweep kernel for the semi-Lagrangian update.

Entries are stored node-major after a stable sort, four interpolation stencil
slots per entry. Each node's new value is an independent pure function of the
previous iterate, so the parallel loop is deterministic regardless of the
thread count (no cross-thread reductions, fastmath off).
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def sweep(node_ptr, idx, w, cost, disc, safe_value, v, out):  # pragma: no cover - jitted
    n = node_ptr.size - 1
    for node in prange(n):
        lo = node_ptr[node]
        hi = node_ptr[node + 1]
        if lo == hi:
            out[node] = safe_value
            continue
        best = np.inf
        for k in range(lo, hi):
            foot = (w[k, 0] * v[idx[k, 0]] + w[k, 1] * v[idx[k, 1]]
                    + w[k, 2] * v[idx[k, 2]] + w[k, 3] * v[idx[k, 3]])
            val = cost[k] + disc[k] * foot
            if val < best:
                best = val
        out[node] = best
