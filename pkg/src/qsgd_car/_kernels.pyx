# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rollout kernel. Must stay bit-compatible with ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def episode_lengths(thetas, double z_split, double v_split, bint partitioned, z0, v0,
                    double z_min, double z_goal, double v_min, double v_max,
                    double force_gain, double gravity_gain, double wavenumber,
                    long t_max, double tie):
    cdef double[:, ::1] th = np.ascontiguousarray(thetas, dtype=np.float64)
    cdef double[::1] zs = np.ascontiguousarray(z0, dtype=np.float64)
    cdef double[::1] vs = np.ascontiguousarray(v0, dtype=np.float64)
    cdef Py_ssize_t n_ic = zs.shape[0]
    out = np.zeros(n_ic, dtype=np.int64)
    cdef cnp.int64_t[::1] steps = out
    cdef Py_ssize_t i, r
    cdef long n
    cdef double z, v, zn, vn, a, u
    cdef double th1 = th[0, 0]
    cdef double th2 = th[0, 1]
    with nogil:
        for i in range(n_ic):
            z = zs[i]
            v = vs[i]
            if z >= z_goal:
                continue
            n = 0
            while n < t_max:
                if partitioned:
                    if z >= z_split:
                        r = 0 if v >= v_split else 3
                    else:
                        r = 1 if v >= v_split else 2
                    th1 = th[r, 0]
                    th2 = th[r, 1]
                a = th1 * v * v * v + th2 * v * sin(z)
                if a > 0.0:
                    u = 1.0
                elif a < 0.0:
                    u = -1.0
                else:
                    u = tie
                zn = z + v
                vn = v + force_gain * u - gravity_gain * cos(wavenumber * z)
                n += 1
                if zn >= z_goal:
                    break
                if zn < z_min:
                    zn = z_min
                if vn < v_min:
                    vn = v_min
                elif vn > v_max:
                    vn = v_max
                if zn == z_min and vn < 0.0:
                    vn = 0.0
                z = zn
                v = vn
            steps[i] = n
    return out
