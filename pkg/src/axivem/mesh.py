"""Polygonal meshes of the meridional (r, z) half-plane and per-element geometry.

Vertices are stored as an ``(N, 2)`` array of ``(r, z)`` coordinates. Every
vertex must lie strictly off the symmetry axis. Elements are tuples of vertex
ids, normalised to counter-clockwise order when the mesh is built.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEGENERACY_TOL = 1e-14


class MeshError(ValueError):
    """Raised for invalid or unsupported mesh input."""


def signed_area(pts):
    r, z = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(r * np.roll(z, -1) - np.roll(r, -1) * z))


def polygon_diameter(pts):
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and 0 not in (d1, d2, d3, d4):
        return True
    return False


def is_simple(pts):
    """True if no two non-adjacent edges of the closed polygon intersect."""
    m = len(pts)
    for i in range(m):
        a, b = pts[i], pts[(i + 1) % m]
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue
            if _segments_cross(a, b, pts[j], pts[(j + 1) % m]):
                return False
    return True


@dataclass(frozen=True)
class ElementGeometry:
    """Geometric data of one polygon.

    The fan triangles are ``(fan_center, v_i, v_{i+1})`` for each local edge
    ``i``. The fan apex is the vertex average, the point at which the
    virtual shape functions take the value ``1/m``.
    """

    vertices: np.ndarray
    area: float
    centroid: np.ndarray
    diameter: float
    weighted_volume: float
    fan_center: np.ndarray
    tri_area: np.ndarray
    tri_rbar: np.ndarray
    edge_lengths: np.ndarray

    @property
    def m(self):
        return len(self.vertices)

    @property
    def triangles(self):
        """List of ``(apex, v_i, v_{i+1})`` coordinate triples, one per edge."""
        v = self.vertices
        return [np.array([self.fan_center, v[i], v[(i + 1) % self.m]]) for i in range(self.m)]


def polygon_geometry(vertices):
    """Geometry of a single counter-clockwise polygon given as ``(m, 2)`` coordinates."""
    pts = np.asarray(vertices, dtype=float)
    m = len(pts)
    if m < 3:
        raise MeshError("a polygon needs at least 3 vertices")
    h = polygon_diameter(pts)
    area = signed_area(pts)
    if area <= DEGENERACY_TOL * h * h:
        if area < 0:
            raise MeshError("polygon vertices are ordered clockwise")
        raise MeshError("degenerate polygon (zero area)")

    r, z = pts[:, 0], pts[:, 1]
    rn, zn = np.roll(r, -1), np.roll(z, -1)
    cross = r * zn - rn * z
    centroid = np.array([((r + rn) * cross).sum(), ((z + zn) * cross).sum()]) / (6.0 * area)

    apex = pts.mean(axis=0)
    tri_area = 0.5 * ((r - apex[0]) * (zn - apex[1]) - (rn - apex[0]) * (z - apex[1]))
    if np.any(tri_area <= DEGENERACY_TOL * h * h):
        raise MeshError("polygon is not star-shaped with respect to its vertex average")
    tri_rbar = (apex[0] + r + rn) / 3.0
    edge_lengths = np.hypot(rn - r, zn - z)
    if np.any(edge_lengths <= DEGENERACY_TOL * h):
        raise MeshError("zero-length edge")

    return ElementGeometry(
        vertices=pts,
        area=area,
        centroid=centroid,
        diameter=max(h, float(edge_lengths.max())),
        weighted_volume=float((tri_area * tri_rbar).sum()),
        fan_center=apex,
        tri_area=tri_area,
        tri_rbar=tri_rbar,
        edge_lengths=edge_lengths,
    )


@dataclass(frozen=True)
class PolyMesh:
    vertices: np.ndarray
    elements: tuple
    boundary_edges: tuple = field(init=False)

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or not np.all(np.isfinite(verts)):
            raise MeshError("vertices must be a finite (N, 2) array of (r, z)")
        if np.any(verts[:, 0] <= 0.0):
            raise MeshError("all vertices need r > 0; axis-touching domains are unsupported")
        verts.setflags(write=False)

        elements = []
        for k, ids in enumerate(self.elements):
            ids = tuple(int(i) for i in ids)
            if len(ids) < 3 or len(set(ids)) != len(ids):
                raise MeshError(f"element {k}: needs >= 3 distinct vertex ids")
            if min(ids) < 0 or max(ids) >= len(verts):
                raise MeshError(f"element {k}: vertex id out of range")
            pts = verts[list(ids)]
            h = polygon_diameter(pts)
            a = signed_area(pts)
            if abs(a) <= DEGENERACY_TOL * h * h:
                raise MeshError(f"element {k}: degenerate polygon")
            if a < 0:
                ids = ids[::-1]
                pts = pts[::-1]
            if not is_simple(pts):
                raise MeshError(f"element {k}: polygon is self-intersecting")
            elements.append(ids)

        owners = {}
        for k, ids in enumerate(elements):
            m = len(ids)
            for i in range(m):
                a, b = ids[i], ids[(i + 1) % m]
                owners.setdefault(frozenset((a, b)), []).append((k, i, (a, b)))
        boundary = []
        for key, own in owners.items():
            if len(own) > 2:
                raise MeshError(f"edge {sorted(key)} is shared by more than two elements")
            if len(own) == 2 and own[0][2] != own[1][2][::-1]:
                raise MeshError(f"edge {sorted(key)} has inconsistent orientation (overlap)")
            if len(own) == 1:
                boundary.append(own[0][:2])

        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "elements", tuple(elements))
        object.__setattr__(self, "boundary_edges", tuple(sorted(boundary)))

    @property
    def n_nodes(self):
        return len(self.vertices)

    @property
    def n_elements(self):
        return len(self.elements)

    def element_vertices(self, e):
        return self.vertices[list(self.elements[e])]

    def edge_nodes(self, e, i):
        ids = self.elements[e]
        return ids[i], ids[(i + 1) % len(ids)]

    def boundary_nodes(self):
        nodes = set()
        for e, i in self.boundary_edges:
            nodes.update(self.edge_nodes(e, i))
        return sorted(nodes)

    def find_boundary_edge(self, a, b):
        """Return ``(element, local_edge)`` of the boundary edge joining nodes a and b."""
        for e, i in self.boundary_edges:
            if set(self.edge_nodes(e, i)) == {a, b}:
                return e, i
        raise MeshError(f"({a}, {b}) is not a boundary edge")


def compute_geometry(mesh, element_id):
    return polygon_geometry(mesh.element_vertices(element_id))


def generate_structured_mesh(r_in, r_out, z_min, z_max, nr, nz):
    """Structured grid of ``nr x nz`` counter-clockwise quadrilaterals.

    Node ``iz * (nr + 1) + ir`` sits at radial index ``ir`` and axial index ``iz``.
    """
    if r_in <= 0:
        raise MeshError("r_in must be positive; the domain cannot touch the axis")
    if r_out <= r_in or z_max <= z_min:
        raise MeshError("need r_out > r_in and z_max > z_min")
    if nr < 1 or nz < 1:
        raise MeshError("need at least one division in each direction")
    rs = np.linspace(r_in, r_out, nr + 1)
    zs = np.linspace(z_min, z_max, nz + 1)
    verts = np.array([[r, z] for z in zs for r in rs])
    row = nr + 1
    elements = [
        (iz * row + ir, iz * row + ir + 1, (iz + 1) * row + ir + 1, (iz + 1) * row + ir)
        for iz in range(nz)
        for ir in range(nr)
    ]
    return PolyMesh(verts, tuple(elements))


# --- text format -----------------------------------------------------------
#
#   <n_vertices> <n_elements>
#   r z                       (n_vertices lines)
#   m id_1 ... id_m           (n_elements lines)
#   dirichlet <k>             optional block
#   node r|z value            (k lines)
#   traction <k>              optional block
#   node_a node_b t_r t_z     (k lines)
#
# Blank lines and text after '#' are ignored.


@dataclass
class MeshFile:
    mesh: PolyMesh
    dirichlet: list = field(default_factory=list)
    traction: list = field(default_factory=list)


def _tokens(text):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line.split()


def parse_mesh(text):
    lines = list(_tokens(text))
    try:
        nv, ne = int(lines[0][0]), int(lines[0][1])
        verts = [(float(a), float(b)) for a, b in lines[1:1 + nv]]
        elements = []
        for toks in lines[1 + nv:1 + nv + ne]:
            m = int(toks[0])
            if len(toks) != m + 1:
                raise MeshError(f"element line {' '.join(toks)!r}: expected {m} ids")
            elements.append(tuple(int(t) for t in toks[1:]))
        if len(verts) != nv or len(elements) != ne:
            raise MeshError("file ended before all vertices/elements were read")
        out = MeshFile(PolyMesh(np.array(verts), tuple(elements)))
        rest = lines[1 + nv + ne:]
        pos = 0
        while pos < len(rest):
            kind, count = rest[pos][0].lower(), int(rest[pos][1])
            block = rest[pos + 1:pos + 1 + count]
            if len(block) != count:
                raise MeshError(f"{kind} block truncated")
            if kind == "dirichlet":
                out.dirichlet += [(int(n), c.lower(), float(v)) for n, c, v in block]
            elif kind == "traction":
                out.traction += [(int(a), int(b), float(tr), float(tz)) for a, b, tr, tz in block]
            else:
                raise MeshError(f"unknown block {kind!r}")
            pos += 1 + count
    except (IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"malformed mesh file: {exc}") from exc
    return out


def read_mesh(path):
    return parse_mesh(Path(path).read_text())


def format_mesh(mesh, dirichlet=(), traction=()):
    out = [f"{mesh.n_nodes} {mesh.n_elements}"]
    out += [f"{r!r} {z!r}" for r, z in mesh.vertices.tolist()]
    out += [" ".join(map(str, (len(ids),) + ids)) for ids in mesh.elements]
    if dirichlet:
        out.append(f"dirichlet {len(dirichlet)}")
        out += [f"{int(n)} {c} {float(v)!r}" for n, c, v in dirichlet]
    if traction:
        out.append(f"traction {len(traction)}")
        out += [f"{int(a)} {int(b)} {float(tr)!r} {float(tz)!r}" for a, b, tr, tz in traction]
    return "\n".join(out) + "\n"


def write_mesh(path, mesh, dirichlet=(), traction=()):
    Path(path).write_text(format_mesh(mesh, dirichlet, traction))
