"""Global assembly, linear solve and strain recovery.

Global DOFs are interleaved: node ``i`` owns ``2i`` (u_r) and ``2i + 1`` (u_z).
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .element import DEFAULT_FORMULATION, local_stiffness
from .loads import apply_dirichlet
from .material import STRAIN_LABELS, STRESS_LABELS, constitutive_matrix
from .mesh import compute_geometry

RESIDUAL_TOL = 1e-12


class SolverError(RuntimeError):
    """Singular, indefinite or inaccurate linear solve."""


def element_dofs(ids):
    ids = np.asarray(ids, dtype=int)
    return np.column_stack([2 * ids, 2 * ids + 1]).ravel()


@dataclass
class GlobalSystem:
    K: sp.csr_matrix
    f: np.ndarray
    kernels: list
    n_nodes: int

    @property
    def n_dofs(self):
        return 2 * self.n_nodes


def element_kernels(mesh, material, tau=None, formulation=DEFAULT_FORMULATION, serial=False):
    """Per-element kernels in element order. Threads only change wall time, not results."""

    def build(e):
        return local_stiffness(compute_geometry(mesh, e), material, tau, formulation)

    if serial or mesh.n_elements < 8:
        return [build(e) for e in range(mesh.n_elements)]
    with ThreadPoolExecutor() as pool:
        return list(pool.map(build, range(mesh.n_elements)))


def assemble(mesh, material, tau=None, formulation=DEFAULT_FORMULATION, serial=False, kernels=None):
    """Scatter-add local stiffness matrices in element order; ``f`` starts at zero."""
    if kernels is None:
        kernels = element_kernels(mesh, material, tau, formulation, serial)
    rows, cols, vals = [], [], []
    for ids, k in zip(mesh.elements, kernels):
        dofs = element_dofs(ids)
        if k.K.shape != (len(dofs), len(dofs)):
            raise ValueError("local stiffness does not match the element DOF map")
        rows.append(np.repeat(dofs, len(dofs)))
        cols.append(np.tile(dofs, len(dofs)))
        vals.append(k.K.ravel())
    n = 2 * mesh.n_nodes
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    K.sum_duplicates()
    # duplicate summation order may differ between (i, j) and (j, i)
    K = ((K + K.T) * 0.5).tocsr()
    K.sort_indices()
    return GlobalSystem(K, np.zeros(n), kernels, mesh.n_nodes)


@dataclass
class SolveReport:
    displacement: np.ndarray
    strains: np.ndarray
    stresses: np.ndarray
    residual: float
    iterations: int = 0
    method: str = "direct"


def _residual(K, d, f):
    r = np.linalg.norm(K @ d - f)
    nf = np.linalg.norm(f)
    return r / nf if nf > 0 else r


def solve_linear(K, f, method="direct", tol=RESIDUAL_TOL):
    """Solve a constrained system; returns ``(d, relative_residual, iterations)``."""
    K = sp.csr_matrix(K)
    if method == "direct":
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            try:
                d = spla.spsolve(K.tocsc(), f)
            except (RuntimeError, spla.MatrixRankWarning) as exc:
                raise SolverError(f"factorization failed: {exc}") from exc
        its = 0
    elif method == "cg":
        diag = K.diagonal()
        if np.any(diag <= 0):
            raise SolverError("non-positive diagonal entry; matrix is not SPD")
        M = sp.diags(1.0 / diag)
        its = 0

        def count(_):
            nonlocal its
            its += 1

        d, status = spla.cg(K, f, rtol=tol * 1e-2, atol=0.0, maxiter=10 * K.shape[0],
                            M=M, callback=count)
        if status != 0:
            raise SolverError(f"conjugate gradients did not converge (status {status})")
    else:
        raise ValueError(f"unknown solver {method!r}")
    if not np.all(np.isfinite(d)):
        raise SolverError("singular system: check that the axial translation is constrained")
    res = _residual(K, d, f)
    if res > tol:
        raise SolverError(f"relative residual {res:.3e} exceeds {tol:g}; "
                          "the system is singular or badly conditioned "
                          "(is the axial translation constrained?)")
    return d, res, its


def recover_strains(mesh, kernels, d):
    """Constant projected strain ``B_E d_E`` of each element, shape ``(n_elements, 4)``."""
    d = np.asarray(d, dtype=float)
    return np.array([k.B @ d[element_dofs(ids)] for ids, k in zip(mesh.elements, kernels)])


def solve(system, dirichlet=None, material=None, mesh=None, method="direct"):
    """Constrain, solve and post-process. ``mesh`` and ``material`` enable strain recovery."""
    K, f = system.K, system.f
    if dirichlet is None or not np.any(dirichlet.dofs % 2 == 1):
        # u_z = const has zero energy on every element
        raise SolverError("singular system: no axial displacement is prescribed, "
                          "so the axial translation is unconstrained")
    K, f = apply_dirichlet(K, f, dirichlet)
    d, res, its = solve_linear(K, f, method)
    if mesh is not None:
        eps = recover_strains(mesh, system.kernels, d)
        sig = eps @ constitutive_matrix(material).T if material is not None else np.full_like(eps, np.nan)
    else:
        eps = sig = np.empty((0, 4))
    return SolveReport(d, eps, sig, res, its, method)


# --- CSV ------------------------------------------------------------------

def fmt(x):
    return f"{x:.17g}"


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) if isinstance(v, float) else str(v)
                              for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_displacements(path, mesh, d):
    rows = [(i, float(r), float(z), float(d[2 * i]), float(d[2 * i + 1]))
            for i, (r, z) in enumerate(mesh.vertices)]
    write_csv(path, ("node", "r", "z", "u_r", "u_z"), rows)


def write_element_table(path, mesh, report):
    header = ("element", "centroid_r", "centroid_z") + STRAIN_LABELS + STRESS_LABELS
    rows = []
    for e in range(mesh.n_elements):
        c = compute_geometry(mesh, e).centroid
        rows.append((e, float(c[0]), float(c[1]),
                     *map(float, report.strains[e]), *map(float, report.stresses[e])))
    write_csv(path, header, rows)
