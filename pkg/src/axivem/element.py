"""First-order axisymmetric virtual element kernels.

Local DOF ``2i`` is ``u_r`` at vertex ``i`` and ``2i + 1`` is ``u_z``. The
projection matrix ``B`` (4 x 2m) maps element DOFs to the constant strain
``(eps_r, eps_z, gamma_rz, eps_theta)`` that is energy-equivalent, in the
r-weighted sense, to the virtual displacement.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .material import constitutive_matrix
from .quadrature import edge_rule

PINV_RTOL = 1e-12


class ElementError(ValueError):
    pass


@dataclass(frozen=True)
class Formulation:
    """Switches between the consistent kernels and the literal variants.

    fan_weights
        ``"barycentric"``: each vertex function is linear on every fan
        triangle with value ``1/m`` at the apex, so it also contributes to
        triangles it is not a corner of. ``"incident"``: only the two fan
        triangles touching the vertex are counted.
    axial_shear
        ``"correction"``: the ``tau_rz / r`` divergence term is subtracted
        for axial DOFs like the radial ``(sigma_r - sigma_theta) / r`` term.
        ``"zero"``: the shear entry of the right-hand side is zeroed for
        axial DOFs instead.
    stabilized_modes
        Null space of the stabilisation. ``"linear"``: nodal values of all
        linear displacement fields. ``"constant_strain"``: only those with
        constant axisymmetric strain, ``(r, 0), (0, 1), (0, r), (0, z)``.
        ``"projector"``: the row space of ``B`` (projector ``P``).
    two_pi
        Keep the ``2 pi r`` measure in the stabilisation edge integrals.
    """

    fan_weights: str = "barycentric"
    axial_shear: str = "correction"
    stabilized_modes: str = "linear"
    two_pi: bool = True

    def __post_init__(self):
        if self.fan_weights not in ("barycentric", "incident"):
            raise ValueError(f"unknown fan_weights {self.fan_weights!r}")
        if self.axial_shear not in ("correction", "zero"):
            raise ValueError(f"unknown axial_shear {self.axial_shear!r}")
        if self.stabilized_modes not in ("linear", "constant_strain", "projector"):
            raise ValueError(f"unknown stabilized_modes {self.stabilized_modes!r}")

    @classmethod
    def literal(cls, two_pi=True):
        return cls("incident", "zero", "projector", two_pi)


DEFAULT_FORMULATION = Formulation()


@dataclass(frozen=True)
class ElementKernels:
    B: np.ndarray
    rhs_matrix: np.ndarray
    P: np.ndarray
    stab_projector: np.ndarray
    K_c: np.ndarray
    K_s: np.ndarray
    K: np.ndarray
    weighted_volume: float
    tau: float


def _edges(geom):
    v = geom.vertices
    m = len(v)
    for i in range(m):
        j = (i + 1) % m
        p, q = v[i], v[j]
        L = geom.edge_lengths[i]
        if L <= 0:
            raise ElementError("zero-length edge")
        normal = np.array([q[1] - p[1], p[0] - q[0]]) / L
        yield i, j, p, q, L, normal


def stress_basis(C):
    """Row p holds the stress ``C @ e_p`` of the p-th unit strain."""
    return np.asarray(C, dtype=float).T.copy()


def boundary_integral_matrix(geom, C):
    """Boundary term of the projection: entry (j, p) is the integral over the
    element boundary of ``v_j . (sigma_p n) r ds`` for the unit-DOF field ``v_j``.
    """
    S = stress_basis(C)
    out = np.zeros((2 * geom.m, 4))
    for i, j, p, q, L, (nr, nz) in _edges(geom):
        t_r = S[:, 0] * nr + S[:, 2] * nz
        t_z = S[:, 2] * nr + S[:, 1] * nz
        s, w = edge_rule(p, q, geom.diameter)
        r = p[0] + s * (q[0] - p[0])
        a = np.sum(w * (1 - s) * r) * L
        b = np.sum(w * s * r) * L
        out[2 * i] += a * t_r
        out[2 * i + 1] += a * t_z
        out[2 * j] += b * t_r
        out[2 * j + 1] += b * t_z
    return out


def fan_shape_integrals(geom, fan_weights="barycentric"):
    """Approximate ``int_E N_k dr dz`` of every vertex function over the fan."""
    m = geom.m
    A = geom.tri_area
    prev = np.roll(A, 1)  # triangle of edge k-1 also touches vertex k
    if fan_weights == "barycentric":
        return A.sum() / (3 * m) + (A + prev) / 3.0
    return (1 + 1 / m) / 3.0 * (A + prev)


def volumetric_correction_matrix(geom, C, formulation=DEFAULT_FORMULATION):
    """Volume term of the projection, from the divergence of constant stresses
    in cylindrical coordinates: ``(sigma_r - sigma_theta) / r`` on radial DOFs
    and ``tau_rz / r`` on axial DOFs. The ``1/r`` cancels the r-weight.
    """
    S = stress_basis(C)
    W = fan_shape_integrals(geom, formulation.fan_weights)
    out = np.zeros((2 * geom.m, 4))
    out[0::2] = np.outer(W, S[:, 0] - S[:, 3])
    if formulation.axial_shear == "correction":
        out[1::2] = np.outer(W, S[:, 2])
    return out


def build_B(geom, C, formulation=DEFAULT_FORMULATION, rhs=None):
    """Solve ``C @ B[:, j] = rhs_j / V`` for every local DOF j."""
    C = np.asarray(C, dtype=float)
    if rhs is None:
        rhs = boundary_integral_matrix(geom, C) - volumetric_correction_matrix(geom, C, formulation)
    if np.linalg.cond(C) > 1e12:
        raise ElementError("singular strain-stress system; check the material constants")
    cols = rhs.T / geom.weighted_volume
    if formulation.axial_shear == "zero":
        cols = cols.copy()
        cols[2, 1::2] = 0.0
    # coefficient row p is (C e_p)^T
    B, *_ = scipy.linalg.lstsq(stress_basis(C), cols)
    return B


def consistency_stiffness(B, C, weighted_volume):
    K = B.T @ C @ B * weighted_volume
    return 0.5 * (K + K.T)


def projector_P(B):
    """Orthogonal projector ``B^T (B B^T)^+ B`` onto the row space of B."""
    G = np.linalg.pinv(B @ B.T, rcond=PINV_RTOL, hermitian=True)
    P = B.T @ G @ B
    return 0.5 * (P + P.T)


def constant_strain_modes(geom):
    """Nodal vectors of the displacement fields with constant axisymmetric strain."""
    r, z = geom.vertices[:, 0], geom.vertices[:, 1]
    m = geom.m
    modes = np.zeros((2 * m, 4))
    modes[0::2, 0] = r
    modes[1::2, 1] = 1.0
    modes[1::2, 2] = r
    modes[1::2, 3] = z
    return modes


def linear_modes(geom):
    """Nodal vectors of ``(1, 0), (r, 0), (z, 0), (0, 1), (0, r), (0, z)``."""
    r, z = geom.vertices[:, 0], geom.vertices[:, 1]
    modes = np.zeros((2 * geom.m, 6))
    for k, f in enumerate((np.ones_like(r), r, z)):
        modes[0::2, k] = f
        modes[1::2, 3 + k] = f
    return modes


STABILIZED_MODES = {"linear": linear_modes, "constant_strain": constant_strain_modes}


def mode_projector(modes):
    Q, _ = np.linalg.qr(modes)
    return Q @ Q.T


def boundary_mass(geom, two_pi=True):
    """``sum_e sum_q c r_q w_q N(s_q) N(s_q)^T |e|`` scattered per component, c = 2 pi or 1."""
    n = 2 * geom.m
    M = np.zeros((n, n))
    c = 2 * np.pi if two_pi else 1.0
    for i, j, p, q, L, _ in _edges(geom):
        s, w = edge_rule(p, q, geom.diameter)
        r = p[0] + s * (q[0] - p[0])
        N = np.stack([1 - s, s])
        block = c * L * (N * (w * r)) @ N.T
        for comp in (0, 1):
            idx = [2 * i + comp, 2 * j + comp]
            M[np.ix_(idx, idx)] += block
    return M


def stabilization_stiffness(geom, projector, tau, two_pi=True):
    """``tau / h_E (I - Pi) M (I - Pi)^T``; zero on the range of ``projector``."""
    if not tau > 0:
        raise ElementError("stabilisation parameter must be positive")
    I_P = np.eye(2 * geom.m) - projector
    Ks = tau / geom.diameter * (I_P @ boundary_mass(geom, two_pi) @ I_P.T)
    return 0.5 * (Ks + Ks.T)


def local_stiffness(geom, material, tau=None, formulation=DEFAULT_FORMULATION):
    """All kernels of one element; ``tau`` defaults to the shear modulus."""
    C = constitutive_matrix(material)
    tau = material.lame_mu if tau is None else float(tau)
    rhs = boundary_integral_matrix(geom, C) - volumetric_correction_matrix(geom, C, formulation)
    B = build_B(geom, C, formulation, rhs=rhs)
    K_c = consistency_stiffness(B, C, geom.weighted_volume)
    P = projector_P(B)
    if formulation.stabilized_modes == "projector":
        Pi = P
    else:
        Pi = mode_projector(STABILIZED_MODES[formulation.stabilized_modes](geom))
    K_s = stabilization_stiffness(geom, Pi, tau, formulation.two_pi)
    K = K_c + K_s
    return ElementKernels(B, rhs, P, Pi, K_c, K_s, 0.5 * (K + K.T), geom.weighted_volume, tau)


def format_kernels(kernels, precision=17):
    """Plain-text dump of an element's matrices."""
    out = []
    for name in ("B", "rhs_matrix", "P", "K_c", "K_s", "K"):
        A = getattr(kernels, name)
        out.append(f"[{name}] {A.shape[0]}x{A.shape[1]}")
        out += [" ".join(f"{x:.{precision}g}" for x in row) for row in A]
        out.append("")
    out.append(f"weighted_volume {kernels.weighted_volume:.{precision}g}")
    out.append(f"tau {kernels.tau:.{precision}g}")
    return "\n".join(out) + "\n"
