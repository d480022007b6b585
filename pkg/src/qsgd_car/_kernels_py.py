"""Pure-Python rollout kernel, used when the compiled extension is unavailable.

Arithmetic and branch order mirror ``_kernels.pyx`` exactly so both backends
return identical step counts.
"""

from math import cos, sin

import numpy as np


def episode_lengths(thetas, z_split, v_split, partitioned, z0, v0,
                    z_min, z_goal, v_min, v_max, force_gain, gravity_gain, wavenumber,
                    t_max, tie):
    thetas = np.ascontiguousarray(thetas, dtype=np.float64).tolist()
    zs = np.ascontiguousarray(z0, dtype=np.float64).tolist()
    vs = np.ascontiguousarray(v0, dtype=np.float64).tolist()
    out = np.zeros(len(zs), dtype=np.int64)
    th1, th2 = thetas[0]
    for i in range(len(zs)):
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
                th1, th2 = thetas[r]
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
        out[i] = n
    return out
