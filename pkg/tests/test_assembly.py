import os

import numpy as np
import pytest

from mixfem import SpaceDescriptor, UnstablePair, assemble_matrices, assemble_system, build_coefficient
from mixfem.assembly import check_stable_pair, dirichlet_load, dump_matrix_market

STABLE_PAIRS = [("RT", 0, 0), ("RT", 1, 1), ("BDM", 1, 0), ("BDM", 2, 1)]


@pytest.mark.parametrize("family,degree,pot_degree", STABLE_PAIRS)
def test_matrix_shapes_and_symmetry(distorted_mesh, family, degree, pot_degree):
    coeff = build_coefficient(distorted_mesh, {0: 1.0})
    A, B, flux_dofmap, pot_dofmap = assemble_matrices(distorted_mesh, coeff, SpaceDescriptor(family, degree),
                                                      pot_degree)
    A = A.toarray()
    assert A.shape == (flux_dofmap.n_global, flux_dofmap.n_global)
    assert B.shape == (pot_dofmap.n_global, flux_dofmap.n_global)
    assert np.allclose(A, A.T, atol=1e-14 * np.abs(A).max())
    assert np.linalg.eigvalsh(A).min() > 0
    # div maps onto the potential space: B has full row rank
    assert np.linalg.matrix_rank(B.toarray()) == pot_dofmap.n_global


@pytest.mark.parametrize("family,degree,pot_degree", STABLE_PAIRS)
def test_divergence_of_interior_dofs_integrates_to_zero(square_mesh, family, degree, pot_degree):
    coeff = build_coefficient(square_mesh, {0: 1.0})
    _, B, flux_dofmap, pot_dofmap = assemble_matrices(square_mesh, coeff, SpaceDescriptor(family, degree),
                                                      pot_degree)
    # the constant 1 in the hierarchical basis is the first local function of every triangle
    ones = np.zeros(pot_dofmap.n_global)
    ones[pot_dofmap.cell_dofs[:, 0]] = 1.0
    total = B.T.dot(ones)
    ne = flux_dofmap.space.n_edge_dofs
    boundary = np.zeros(flux_dofmap.n_global, dtype=bool)
    for j in range(ne):
        boundary[square_mesh.dirichlet_edges * ne + j] = True
    assert np.allclose(total[~boundary], 0.0, atol=1e-12)


def test_mass_matrix_scales_with_inverse_alpha(square_mesh):
    desc = SpaceDescriptor("RT", 1)
    A1, B1, _, _ = assemble_matrices(square_mesh, build_coefficient(square_mesh, {0: 1.0}), desc, 1)
    A4, B4, _, _ = assemble_matrices(square_mesh, build_coefficient(square_mesh, {0: 4.0}), desc, 1)
    assert np.allclose(A4.toarray(), 0.25 * A1.toarray())
    assert np.allclose(B4.toarray(), B1.toarray())


def test_dirichlet_load_of_constant_data(square_mesh):
    """ -<c, phi . n> vanishes on interior DOFs and equals -c times the outward edge flux on boundary DOFs. """
    coeff = build_coefficient(square_mesh, {0: 1.0})
    _, _, flux_dofmap, _ = assemble_matrices(square_mesh, coeff, SpaceDescriptor("RT", 0), 0)
    F = dirichlet_load(square_mesh, flux_dofmap, lambda p: np.full(len(p), 2.0))
    expected = np.zeros(flux_dofmap.n_global)
    expected[square_mesh.dirichlet_edges] = -2.0
    assert np.allclose(F, expected, atol=1e-13)


def test_unstable_pairs_rejected(square_mesh):
    coeff = build_coefficient(square_mesh, {0: 1.0})
    with pytest.raises(UnstablePair):
        check_stable_pair(SpaceDescriptor("RT", 0), 1)
    with pytest.raises(UnstablePair):
        check_stable_pair(SpaceDescriptor("BDM", 1), 1)
    with pytest.raises(UnstablePair):
        assemble_matrices(square_mesh, coeff, SpaceDescriptor("RT", 1), 0)


def test_assemble_system_and_dump(tmp_path, square_mesh, smooth_problem):
    coeff = build_coefficient(square_mesh, {0: 1.0})
    system = assemble_system(square_mesh, coeff, SpaceDescriptor("BDM", 1), 0, smooth_problem.f, smooth_problem.g)
    assert system.n_flux == 2 * square_mesh.n_edges
    assert system.n_pot == square_mesh.n_triangles
    # homogeneous Dirichlet data
    assert np.allclose(system.F_flux, 0.0)
    # integral of 2 pi^2 sin(pi x) sin(pi y) over the unit square
    assert system.F_pot.sum() == pytest.approx(8.0, rel=1e-3)

    folder = str(tmp_path / "matrices")
    dump_matrix_market(system, folder)
    assert os.path.isfile(os.path.join(folder, "A.mtx"))
    assert os.path.isfile(os.path.join(folder, "B.mtx"))
