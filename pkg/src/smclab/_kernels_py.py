"""Pure-Python replication kernels, bit-identical to the compiled ``_kernels``.

Sums are accumulated left to right (``np.cumsum``) so that every rounding
step matches the sequential loops of the compiled version.
"""
import math

import numpy as np

from .rng import uniforms

SCALE_BITS = 800
_TINY = 2.0 ** -SCALE_BITS
_HUGE = 2.0 ** SCALE_BITS


def _search(cum, t):
    idx = np.searchsorted(cum, t, side="right")
    return np.minimum(idx, cum.shape[-1] - 1)


def simulate(sizes, mu0_cum, gbar_flat, gbar_off, kcum_flat, kcum_off, f, N, keys,
             eta_out, phi_out, pos_out):
    n = len(sizes) - 1
    keep = pos_out.shape[0] == len(keys)
    gbars = [gbar_flat[gbar_off[k]:gbar_off[k] + sizes[k]] for k in range(n)]
    kcums = [
        kcum_flat[kcum_off[k - 1]:kcum_off[k - 1] + sizes[k - 1] * sizes[k]].reshape(sizes[k - 1], sizes[k])
        for k in range(1, n + 1)
    ]
    for r, key in enumerate(keys):
        pos = _search(mu0_cum, uniforms(key, 0, N) * mu0_cum[-1])
        phi, scale, ctr = 1.0, 0, N
        for k in range(1, n + 1):
            cum = np.cumsum(gbars[k - 1][pos])
            total = cum[-1]
            phi = phi * (total / N)
            while 0.0 < phi < _TINY:
                phi *= _HUGE
                scale += 1
            while phi > _HUGE:
                phi *= _TINY
                scale -= 1
            u = uniforms(key, ctr, 2 * N)
            ctr += 2 * N
            parents = pos[_search(cum, u[:N] * total)]
            rows = kcums[k - 1][parents]
            t = u[N:] * rows[:, -1]
            pos = np.minimum((rows <= t[:, None]).sum(axis=1), rows.shape[1] - 1)
        eta_out[r] = np.cumsum(f[pos])[-1] / N
        phi_out[r] = math.ldexp(phi, -SCALE_BITS * scale)
        if keep:
            pos_out[r, :] = pos


def sis(pi_cum, fw, N, keys, out):
    total = pi_cum[-1]
    for r, key in enumerate(keys):
        x = _search(pi_cum, uniforms(key, 0, N) * total)
        out[r] = np.cumsum(fw[x])[-1] / N
