"""Compiled summation loops.

Every reduction runs sequentially in a fixed order with Neumaier
compensation; parallelism is only across independent outputs, so results
are bit-identical for any thread count.
"""

import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is too old here; never probe it first
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@njit(cache=True, parallel=True)
def kernel_quadrant(nx, ny, nz, dx, dy, dz):
    """``q[i, j] = sum_k ((i dx)^2 + (j dy)^2 + (k dz)^2)^(-7/2)`` for k in [-nz, nz]."""
    q = np.empty((nx + 1, ny + 1))
    for i in prange(nx + 1):
        for j in range(ny + 1):
            base = (i * dx) ** 2 + (j * dy) ** 2
            s = 0.0
            comp = 0.0
            for k in range(-nz, nz + 1):
                if i == 0 and j == 0 and k == 0:
                    continue
                t = (base + (k * dz) ** 2) ** -3.5
                tt = s + t
                if abs(s) >= abs(t):
                    comp += (s - tt) + t
                else:
                    comp += (t - tt) + s
                s = tt
            q[i, j] = s + comp
    return q


@njit(cache=True, parallel=True)
def probe_sums(px, py, skip, sx, sy, sw, table, ox, oy):
    """``out[p] = sum_j sw[j] * table[px[p] - sx[j] + ox, py[p] - sy[j] + oy]``.

    Source ``skip[p]`` is left out of probe ``p``'s sum (-1 skips nothing).
    """
    n = px.size
    m = sx.size
    out = np.empty(n)
    for p in prange(n):
        s = 0.0
        comp = 0.0
        ax = px[p] + ox
        ay = py[p] + oy
        sk = skip[p]
        for j in range(m):
            if j == sk:
                continue
            t = sw[j] * table[ax - sx[j], ay - sy[j]]
            tt = s + t
            if abs(s) >= abs(t):
                comp += (s - tt) + t
            else:
                comp += (t - tt) + s
            s = tt
        out[p] = s + comp
    return out


def set_threads(n):
    """Set the worker count, clamped to what the runtime was started with."""
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def get_threads():
    return numba.get_num_threads()
