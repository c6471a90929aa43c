"""Isotropic linear elastic material in axisymmetric form.

Strain vectors are ordered ``(eps_r, eps_z, gamma_rz, eps_theta)`` with
engineering shear ``gamma_rz = du_r/dz + du_z/dr``; stresses are
``(sigma_r, sigma_z, tau_rz, sigma_theta)``.
"""

from dataclasses import dataclass

import numpy as np

STRAIN_LABELS = ("eps_r", "eps_z", "gamma_rz", "eps_theta")
STRESS_LABELS = ("sigma_r", "sigma_z", "tau_rz", "sigma_theta")


class MaterialError(ValueError):
    pass


@dataclass(frozen=True)
class Material:
    youngs_modulus: float
    poisson_ratio: float
    lame_lambda: float
    lame_mu: float

    def __post_init__(self):
        if not self.lame_mu > 0 or not self.lame_lambda + 2 * self.lame_mu > 0:
            raise MaterialError("need mu > 0 and lambda + 2 mu > 0")
        if not -1.0 < self.poisson_ratio < 0.5:
            raise MaterialError("Poisson ratio must lie strictly inside (-1, 0.5)")


def make_material(E, nu):
    if not E > 0:
        raise MaterialError("Young's modulus must be positive")
    if not -1.0 < nu < 0.5:
        raise MaterialError("Poisson ratio must lie strictly inside (-1, 0.5); "
                            "the incompressible limit is unsupported")
    lam = E * nu / ((1 + nu) * (1 - 2 * nu))
    mu = E / (2 * (1 + nu))
    return Material(float(E), float(nu), lam, mu)


def material_from_lame(lam, mu):
    if not mu > 0:
        raise MaterialError("mu must be positive")
    nu = lam / (2 * (lam + mu))
    E = mu * (3 * lam + 2 * mu) / (lam + mu)
    return Material(E, nu, float(lam), float(mu))


def constitutive_matrix(material):
    """4x4 matrix C with ``sigma = C @ eps`` in the orderings above."""
    lam, mu = material.lame_lambda, material.lame_mu
    a = lam + 2 * mu
    return np.array([
        [a, lam, 0.0, lam],
        [lam, a, 0.0, lam],
        [0.0, 0.0, mu, 0.0],
        [lam, lam, 0.0, a],
    ])
