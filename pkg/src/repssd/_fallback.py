"""Pure numpy implementation of the Monte Carlo kernels.

Mirrors ``_kernels.pyx`` operation for operation so both backends draw the
same stream for a given key (the 64-bit words exactly; the normals up to the
last bit of numpy's log/sin/cos).
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S11, _S27, _S30, _S31 = (np.uint64(s) for s in (11, 27, 30, 31))
_ONE = np.uint64(1)
_TWO_PI = 2.0 * np.pi
_INV_2_53 = 1.0 / 9007199254740992.0

CHUNK = 1 << 18


def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _uniforms_at(key, idx):
    words = _mix64(np.uint64(key) + (idx + _ONE) * _GOLDEN)
    return ((words >> _S11).astype(np.float64) + 0.5) * _INV_2_53


def standard_normals(key, start, n):
    j = np.arange(start, start + n, dtype=np.uint64)
    pair = j >> _ONE
    u1 = _uniforms_at(key, pair * np.uint64(2))
    u2 = _uniforms_at(key, pair * np.uint64(2) + _ONE)
    r = np.sqrt(-2.0 * np.log(u1))
    a = _TWO_PI * u2
    return np.where((j & _ONE) == 0, r * np.cos(a), r * np.sin(a))


def count_region_hits(key, mean, sd_theta, tau, se, lowers, uppers, n):
    hits = 0
    for start in range(0, n, CHUNK):
        m = min(CHUNK, n - start)
        z = standard_normals(key, 3 * start, 3 * m).reshape(m, 3)
        theta = mean + sd_theta * z[:, 0]
        theta_r = theta + tau * z[:, 1]
        est = theta_r + se * z[:, 2]
        inside = np.zeros(m, dtype=bool)
        for lo, hi in zip(lowers, uppers):
            inside |= (est >= lo) & (est <= hi)
        hits += int(inside.sum())
    return hits
