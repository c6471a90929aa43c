import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from axivem.assembly import (SolverError, assemble, element_dofs, recover_strains, solve, solve_linear,
                             write_displacements, write_element_table)
from axivem.element import local_stiffness
from axivem.loads import DirichletSpec
from axivem.mesh import PolyMesh, compute_geometry, generate_structured_mesh


def field_spec(mesh, u, nodes=None):
    return DirichletSpec.from_field(mesh, u, nodes)


def test_single_element_equals_local(steel_like):
    mesh = generate_structured_mesh(1, 2, 0, 1, 1, 1)
    sysm = assemble(mesh, steel_like)
    K_loc = local_stiffness(compute_geometry(mesh, 0), steel_like).K
    dofs = element_dofs(mesh.elements[0])
    assert np.array_equal(sysm.K.toarray()[np.ix_(dofs, dofs)], K_loc)


def test_shared_nodes_add(steel_like):
    mesh = generate_structured_mesh(1, 3, 0, 2, 2, 1)
    K = assemble(mesh, steel_like).K.toarray()
    ka, kb = (local_stiffness(compute_geometry(mesh, e), steel_like).K for e in (0, 1))
    ia = list(mesh.elements[0]).index(1)
    ib = list(mesh.elements[1]).index(1)
    assert K[2, 2] == pytest.approx(ka[2 * ia, 2 * ia] + kb[2 * ib, 2 * ib], rel=1e-15)


def test_golden_system_kernel(golden_mesh, steel_like):
    K = assemble(golden_mesh, steel_like).K.toarray()
    assert K.shape == (50, 50)
    assert np.array_equal(K, K.T)
    w = np.linalg.eigvalsh(K)
    assert np.sum(np.abs(w) < 1e-10 * w.max()) == 1
    dz = np.zeros(50)
    dz[1::2] = 1.0
    assert np.abs(K @ dz).max() < 1e-12


def test_additivity(golden_mesh, steel_like):
    full = assemble(golden_mesh, steel_like).K
    a = PolyMesh(golden_mesh.vertices, golden_mesh.elements[:7])
    b = PolyMesh(golden_mesh.vertices, golden_mesh.elements[7:])
    parts = assemble(a, steel_like).K + assemble(b, steel_like).K
    assert abs(full - parts).max() < 1e-14


def test_threaded_assembly_is_bitwise_serial(steel_like):
    mesh = generate_structured_mesh(1, 3, 0, 2, 8, 8)
    a = assemble(mesh, steel_like, serial=True).K
    b = assemble(mesh, steel_like, serial=False).K
    assert np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
    assert np.array_equal(a.data, b.data)


@pytest.mark.parametrize("u", [lambda r, z: (0.01 * r, 0.0), lambda r, z: (0.0, 0.01 * z)])
def test_boundary_driven_patch_interior(golden_mesh, steel_like, u):
    rep = solve(assemble(golden_mesh, steel_like), field_spec(golden_mesh, u), steel_like, golden_mesh)
    exact = np.array([u(r, z) for r, z in golden_mesh.vertices]).ravel()
    assert np.abs(rep.displacement - exact).max() < 1e-10
    assert rep.residual <= 1e-12


def test_fully_prescribed_shear_field(golden_mesh, steel_like):
    u = lambda r, z: (0.005 * z, 0.005 * r)  # noqa: E731
    spec = field_spec(golden_mesh, u, nodes=range(golden_mesh.n_nodes))
    rep = solve(assemble(golden_mesh, steel_like), spec, steel_like, golden_mesh)
    assert np.abs(rep.strains[:, 2] - 0.01).max() < 1e-12


def test_homogeneous_problem(golden_mesh, steel_like):
    rep = solve(assemble(golden_mesh, steel_like), field_spec(golden_mesh, lambda r, z: (0, 0)),
                steel_like, golden_mesh)
    assert np.array_equal(rep.displacement, np.zeros(50))


@settings(max_examples=10, deadline=None)
@given(st.floats(-100, 100).filter(lambda s: abs(s) > 1e-3))
def test_linearity_in_load(s):
    from axivem.material import make_material

    mesh = generate_structured_mesh(1, 3, 0, 2, 3, 3)
    mat = make_material(1.0, 0.3)
    spec = DirichletSpec.from_entries([(0, "z", 0.0), (1, "z", 0.0), (2, "z", 0.0), (3, "z", 0.0)])
    sysm = assemble(mesh, mat)
    f = np.zeros(32)
    f[2 * 15] = 1.0
    sysm.f = f
    d1 = solve(sysm, spec).displacement
    sysm.f = s * f
    ds = solve(sysm, spec).displacement
    assert ds == pytest.approx(s * d1, rel=1e-10, abs=1e-14)


def test_cg_matches_direct(golden_mesh, steel_like):
    sysm = assemble(golden_mesh, steel_like)
    spec = field_spec(golden_mesh, lambda r, z: (0.001 * r * r, 0.01 * z * z))
    a = solve(sysm, spec, method="direct")
    b = solve(sysm, spec, method="cg")
    assert b.displacement == pytest.approx(a.displacement, abs=1e-11)
    assert b.iterations > 0 and b.residual <= 1e-12


def test_missing_axial_constraint(golden_mesh, steel_like):
    sysm = assemble(golden_mesh, steel_like)
    with pytest.raises(SolverError, match="axial"):
        solve(sysm, DirichletSpec().add(0, "r", 0.0))
    with pytest.raises(SolverError):
        solve(sysm, None)


def test_singular_matrix_reported():
    import scipy.sparse as sp

    K = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SolverError):
        solve_linear(K, np.array([1.0, 0.0]))


def test_recover_strains(golden_mesh, steel_like):
    kernels = assemble(golden_mesh, steel_like).kernels
    dz = np.zeros(50)
    dz[1::2] = 3.0
    assert np.abs(recover_strains(golden_mesh, kernels, dz)).max() < 1e-14
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, 50))
    lhs = recover_strains(golden_mesh, kernels, 2 * a - b)
    rhs = 2 * recover_strains(golden_mesh, kernels, a) - recover_strains(golden_mesh, kernels, b)
    assert lhs == pytest.approx(rhs, abs=1e-13)


def test_csv_round_trip(tmp_path, golden_mesh, steel_like):
    rep = solve(assemble(golden_mesh, steel_like),
                field_spec(golden_mesh, lambda r, z: (np.sqrt(2) * r / 7, z / 3)), steel_like, golden_mesh)
    write_displacements(tmp_path / "d.csv", golden_mesh, rep.displacement)
    write_element_table(tmp_path / "e.csv", golden_mesh, rep)
    d = np.loadtxt(tmp_path / "d.csv", delimiter=",", skiprows=1)
    assert np.array_equal(d[:, 3], rep.displacement[0::2])
    assert np.array_equal(d[:, 4], rep.displacement[1::2])
    e = np.loadtxt(tmp_path / "e.csv", delimiter=",", skiprows=1)
    assert np.array_equal(e[:, 3:7], rep.strains)
    assert np.array_equal(e[:, 7:11], rep.stresses)
