"""Quadrature rules on straight edges and triangles."""

from functools import lru_cache

import numpy as np

# Dunavant degree-4 rule on the reference triangle, barycentric points,
# weights normalised to sum to one.
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322

TRIANGLE_DEG4_BARY = np.array([
    [_A1, _A1, 1 - 2 * _A1],
    [_A1, 1 - 2 * _A1, _A1],
    [1 - 2 * _A1, _A1, _A1],
    [_A2, _A2, 1 - 2 * _A2],
    [_A2, 1 - 2 * _A2, _A2],
    [1 - 2 * _A2, _A2, _A2],
])
TRIANGLE_DEG4_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])


@lru_cache(maxsize=None)
def gauss_unit(n):
    """n-point Gauss-Legendre rule mapped to s in [0, 1] (weights sum to 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def is_vertical(p, q, h_ref):
    """An edge is vertical when its end radii agree to 1e-12 of the reference length."""
    return abs(q[0] - p[0]) <= 1e-12 * h_ref


def edge_rule(p, q, h_ref):
    """Edge rule used throughout the element kernels.

    One midpoint point on vertical edges (constant r), two-point Gauss
    otherwise. Returns (s, w) on [0, 1].
    """
    if is_vertical(p, q, h_ref):
        return np.array([0.5]), np.array([1.0])
    return gauss_unit(2)


def triangle_points(tri):
    """Physical points and weights (summing to the triangle area) of the degree-4 rule."""
    tri = np.asarray(tri, dtype=float)
    (r0, z0), (r1, z1), (r2, z2) = tri
    area = 0.5 * abs((r1 - r0) * (z2 - z0) - (r2 - r0) * (z1 - z0))
    pts = TRIANGLE_DEG4_BARY @ tri
    return pts, TRIANGLE_DEG4_WEIGHTS * area
