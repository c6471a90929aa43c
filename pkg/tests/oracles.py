"""Independent reference computations used by several test modules.

All of them integrate with 16-point Gauss rules and do not reuse the fan
triangulation or the two-point edge rules of the package.
"""

import numpy as np

from axivem.quadrature import gauss_unit

N_ORACLE = 16


def green_weighted_volume(pts, n=N_ORACLE):
    """int_E r dA as the boundary integral of (r^2 / 2) n_r."""
    s, w = gauss_unit(n)
    total = 0.0
    for p, q in zip(pts, np.roll(pts, -1, axis=0)):
        r = p[0] + s * (q[0] - p[0])
        total += (w @ (r * r / 2)) * (q[1] - p[1])  # n_r ds = dz
    return total


def boundary_oracle(geom, C, n=N_ORACLE):
    """Entry (j, p): integral of v_j . (sigma_p n) r along every edge."""
    s, w = gauss_unit(n)
    m = geom.m
    out = np.zeros((2 * m, 4))
    for i in range(m):
        j = (i + 1) % m
        p, q = geom.vertices[i], geom.vertices[j]
        L = np.hypot(*(q - p))
        nr, nz = (q[1] - p[1]) / L, (p[0] - q[0]) / L
        r = p[0] + s * (q[0] - p[0])
        for col in range(4):
            sig = C[:, col]
            t = np.array([sig[0] * nr + sig[2] * nz, sig[2] * nr + sig[1] * nz])
            for node, N in ((i, 1 - s), (j, s)):
                for c in range(2):
                    out[2 * node + c, col] += L * w @ (N * r) * t[c]
    return out


def edge_load_oracle(p1, p2, traction, n=N_ORACLE):
    s, w = gauss_unit(n)
    p1, p2 = np.asarray(p1, float), np.asarray(p2, float)
    L = np.hypot(*(p2 - p1))
    pts = p1 + np.outer(s, p2 - p1)
    t = np.array([traction(*x) for x in pts], dtype=float)
    out = np.zeros(4)
    for k, N in enumerate((1 - s, s)):
        out[2 * k:2 * k + 2] = L * (w * N * pts[:, 0]) @ t
    return out
