import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from axivem.assembly import assemble
from axivem.loads import (BoundaryError, DirichletSpec, TractionSpec, apply_dirichlet,
                          assemble_tractions, edge_load_vector)
from axivem.mesh import MeshError
from oracles import edge_load_oracle

coord = st.floats(0.5, 5.0)


def test_vertical_edge_constant_pressure():
    p, R, L = 2.5, 3.0, 0.5
    f = edge_load_vector((R, 0.0), (R, L), (p, 0.0))
    assert f == pytest.approx([p * R * L / 2, 0, p * R * L / 2, 0], rel=1e-15)


def test_horizontal_edge_constant_traction():
    p = 1.2
    f = edge_load_vector((1.0, 0.0), (2.0, 0.0), (0.0, p))
    assert f == pytest.approx([0, 2 * p / 3, 0, 5 * p / 6], rel=1e-14)


def test_zero_traction():
    assert np.array_equal(edge_load_vector((1.0, 0.0), (2.0, 1.0), (0.0, 0.0)), np.zeros(4))


def test_zero_length_edge():
    with pytest.raises(BoundaryError):
        edge_load_vector((1.0, 0.0), (1.0, 0.0), (1.0, 0.0))


@settings(max_examples=50, deadline=None)
@given(coord, coord, coord, coord, st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_linear_traction_matches_oracle(r1, z1, r2, z2, c):
    if np.hypot(r2 - r1, z2 - z1) < 1e-3:
        return

    def t(r, z):
        return c[0] + c[1] * r + c[2] * z, c[3] + c[4] * r + c[5] * z

    ref = edge_load_oracle((r1, z1), (r2, z2), t)
    got = edge_load_vector((r1, z1), (r2, z2), t)
    assert np.allclose(got, ref, rtol=1e-13, atol=1e-13 * np.abs(ref).max())
    const = edge_load_vector((r1, z1), (r2, z2), (c[0], c[3]))
    assert np.allclose(const, edge_load_oracle((r1, z1), (r2, z2), lambda r, z: (c[0], c[3])),
                       rtol=1e-13, atol=1e-13)


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_linear_in_magnitude(a, b):
    f1 = edge_load_vector((1.0, 0.0), (2.0, 0.5), (1.0, -0.5))
    fa = edge_load_vector((1.0, 0.0), (2.0, 0.5), (a, -0.5 * a))
    assert fa == pytest.approx(a * f1, abs=1e-12)
    del b


def test_outer_boundary_pressure_sums(golden_mesh):
    p = 0.7
    spec = TractionSpec()
    for ids in ((4, 9), (9, 14), (14, 19), (19, 24)):
        spec.add(*ids, (p, 0.0))
    spec.validate(golden_mesh)
    f = assemble_tractions(golden_mesh, spec)
    assert f[0::2].sum() == pytest.approx(p * 3.0 * 2.0, rel=1e-14)
    assert np.all(f[1::2] == 0)


def test_interior_edge_rejected(golden_mesh):
    spec = TractionSpec().add(6, 7, (1.0, 0.0))
    with pytest.raises(MeshError):
        spec.validate(golden_mesh)


def test_dirichlet_spec_conflicts():
    spec = DirichletSpec().add(3, "r", 0.5).add(3, "radial", 0.5)
    assert spec.values == {6: 0.5}
    with pytest.raises(BoundaryError, match="conflicting"):
        spec.add(3, "r", 0.25)
    with pytest.raises(BoundaryError):
        spec.add(3, "theta", 0.0)


def test_dirichlet_from_field(golden_mesh):
    spec = DirichletSpec.from_field(golden_mesh, lambda r, z: (0.01 * r, 0.0))
    assert len(spec.values) == 2 * 16
    assert spec.values[2 * 4] == pytest.approx(0.03)


def test_apply_dirichlet_symmetric_and_exact(golden_mesh, steel_like):
    sysm = assemble(golden_mesh, steel_like)
    spec = DirichletSpec.from_field(golden_mesh, lambda r, z: (0.0, 0.01 * z))
    K, f = apply_dirichlet(sysm.K, sysm.f, spec)
    assert (K - K.T).count_nonzero() == 0
    # exact field: residual on the free DOFs vanishes
    d = np.zeros(50)
    d[1::2] = 0.01 * golden_mesh.vertices[:, 1]
    assert np.abs(K @ d - f).max() <= 1e-10


def test_all_dofs_constrained():
    K = sp.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    spec = DirichletSpec().add(0, "r", 0.3).add(0, "z", -0.2)
    Kc, fc = apply_dirichlet(K, np.array([1.0, 1.0]), spec)
    assert np.array_equal(Kc.toarray(), np.eye(2))
    assert np.array_equal(fc, [0.3, -0.2])


def test_homogeneous_elimination_is_classic():
    A = np.array([[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]])
    spec = DirichletSpec().add(0, "z", 0.0)  # dof 1
    Kc, fc = apply_dirichlet(sp.csr_matrix(A), np.array([1.0, 2.0, 3.0]), spec)
    ref = A.copy()
    ref[1, :] = ref[:, 1] = 0
    ref[1, 1] = 1
    assert np.array_equal(Kc.toarray(), ref)
    assert np.array_equal(fc, [1.0, 0.0, 3.0])
