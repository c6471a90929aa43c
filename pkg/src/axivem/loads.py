"""Boundary conditions: prescribed displacements and edge tractions."""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import polygon_diameter
from .quadrature import edge_rule, gauss_unit

COMPONENTS = {"r": 0, "radial": 0, "z": 1, "axial": 1}


class BoundaryError(ValueError):
    pass


def _component(c):
    try:
        return COMPONENTS[str(c).lower()]
    except KeyError:
        raise BoundaryError(f"unknown displacement component {c!r}; use r or z") from None


@dataclass
class DirichletSpec:
    """Prescribed displacement values keyed by global DOF (node 2i / 2i+1)."""

    values: dict = field(default_factory=dict)

    def add(self, node, component, value):
        dof = 2 * int(node) + _component(component)
        value = float(value)
        old = self.values.get(dof)
        if old is not None and old != value:
            raise BoundaryError(
                f"node {node} component {component}: conflicting values {old!r} and {value!r}")
        self.values[dof] = value
        return self

    @classmethod
    def from_entries(cls, entries):
        spec = cls()
        for node, comp, value in entries:
            spec.add(node, comp, value)
        return spec

    @classmethod
    def from_field(cls, mesh, displacement, nodes=None, components=("r", "z")):
        """Sample ``displacement(r, z) -> (u_r, u_z)`` at ``nodes`` (default: boundary)."""
        spec = cls()
        nodes = mesh.boundary_nodes() if nodes is None else nodes
        for n in nodes:
            r, z = mesh.vertices[n]
            u = displacement(r, z)
            for c in components:
                spec.add(n, c, u[_component(c)])
        return spec

    @property
    def dofs(self):
        return np.array(sorted(self.values), dtype=int)

    def vector(self):
        dofs = self.dofs
        return dofs, np.array([self.values[d] for d in dofs])


@dataclass
class TractionSpec:
    """Edge tractions ``(node_a, node_b, t)``; ``t`` is a constant ``(t_r, t_z)``
    pair or a callable ``t(r, z) -> (t_r, t_z)``."""

    edges: list = field(default_factory=list)

    def add(self, a, b, traction):
        self.edges.append((int(a), int(b), traction))
        return self

    def validate(self, mesh):
        for a, b, _ in self.edges:
            mesh.find_boundary_edge(a, b)


def edge_load_vector(p1, p2, traction, h_ref=None):
    """Consistent nodal loads ``[f_r1, f_z1, f_r2, f_z2]`` of a traction on one edge.

    Constant tractions on vertical edges use the one-point rule; everything
    else uses two-point Gauss.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    L = float(np.hypot(*(p2 - p1)))
    if L <= 0:
        raise BoundaryError("zero-length edge")
    h_ref = L if h_ref is None else h_ref
    if callable(traction):
        s, w = gauss_unit(2)
    else:
        s, w = edge_rule(p1, p2, h_ref)
    pts = p1 + np.outer(s, p2 - p1)
    if callable(traction):
        t = np.array([traction(r, z) for r, z in pts], dtype=float).reshape(len(s), 2)
    else:
        t = np.broadcast_to(np.asarray(traction, dtype=float), (len(s), 2))
    wr = w * pts[:, 0] * L
    out = np.empty(4)
    for k, N in enumerate((1 - s, s)):
        out[2 * k:2 * k + 2] = (wr * N) @ t
    return out


def assemble_tractions(mesh, spec, n_dofs=None):
    f = np.zeros(2 * mesh.n_nodes if n_dofs is None else n_dofs)
    for a, b, t in spec.edges:
        e, _ = mesh.find_boundary_edge(a, b)
        h = polygon_diameter(mesh.element_vertices(e))
        fe = edge_load_vector(mesh.vertices[a], mesh.vertices[b], t, h_ref=h)
        f[[2 * a, 2 * a + 1, 2 * b, 2 * b + 1]] += fe
    return f


def apply_dirichlet(K, f, spec):
    """Symmetric elimination of the prescribed DOFs.

    Returns new ``(K, f)``; row and column ``j`` become the unit vector and
    ``f[j] = g_j`` so the constrained matrix stays symmetric.
    """
    K = sp.csr_matrix(K, dtype=float, copy=True)
    f = np.array(f, dtype=float, copy=True)
    dofs, g = spec.vector()
    if len(dofs) == 0:
        return K, f
    if dofs.max() >= K.shape[0] or dofs.min() < 0:
        raise BoundaryError("prescribed DOF outside the system")
    gfull = np.zeros(K.shape[0])
    gfull[dofs] = g
    f -= K @ gfull
    keep = np.ones(K.shape[0])
    keep[dofs] = 0.0
    D = sp.diags(keep)
    fixed = sp.diags(1.0 - keep)
    K = (D @ K @ D + fixed).tocsr()
    K.eliminate_zeros()
    f[dofs] = g
    return K, f
