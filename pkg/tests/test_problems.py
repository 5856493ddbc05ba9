import numpy as np
import pytest

from mixfem import (
    InvalidParams,
    UnknownProblem,
    classify_elements,
    get_problem,
    kellogg_constants,
    verify_problem,
)
from mixfem.spaces import physical_points
from mixfem.utils.quadrature import quadrature


@pytest.mark.parametrize("gamma", [0.1, 0.25, 0.5, 0.75, 0.9])
def test_kellogg_ratio_closed_form(gamma):
    R, mu = kellogg_constants(gamma)
    assert R == pytest.approx(1.0 / np.tan(0.25 * np.pi * gamma) ** 2, rel=1e-10)
    assert mu.shape == (4, 2)
    assert not mu.flags.writeable


def test_kellogg_reference_values():
    assert kellogg_constants(0.5)[0] == pytest.approx(3.0 + 2.0 * np.sqrt(2.0), rel=1e-12)
    assert kellogg_constants(0.1)[0] == pytest.approx(161.4476, rel=1e-5)


def test_kellogg_ratio_decreases_with_gamma():
    ratios = [kellogg_constants(g)[0] for g in np.linspace(0.05, 0.95, 10)]
    assert np.all(np.diff(ratios) < 0)
    assert ratios[-1] > 1.0


@pytest.mark.parametrize("gamma", [0.0, 1.0, -0.5, 1.5])
def test_kellogg_invalid_gamma(gamma):
    with pytest.raises(InvalidParams):
        kellogg_constants(gamma)


def test_problem_registry():
    with pytest.raises(UnknownProblem):
        get_problem("poisson_l_shape")
    with pytest.raises(InvalidParams):
        get_problem("smooth", gamma=0.5)
    with pytest.raises(InvalidParams):
        get_problem("interface_smooth", jump_ratio=-1.0)
    with pytest.raises(InvalidParams):
        get_problem("kellogg", gamma="steep")
    problem = get_problem("interface_smooth", jump_ratio=10.0)
    assert problem.alpha_by_subdomain == {0: 10.0, 1: 1.0}
    assert problem.params == {"jump_ratio": 10.0}


@pytest.mark.parametrize("name,params", [
    ("smooth", {}),
    ("interface_smooth", {"jump_ratio": 1.0}),
    ("interface_smooth", {"jump_ratio": 1e6}),
    ("kellogg", {"gamma": 0.5}),
    ("kellogg", {"gamma": 0.1}),
])
def test_exact_solutions_verified(name, params):
    checks = verify_problem(get_problem(name, **params), seed=7)
    assert checks["flux_identity"] < 1e-12
    assert checks["pde_residual"] < 1e-8
    assert checks["continuity_u"] < 1e-10
    assert checks["continuity_flux"] < 1e-7


@pytest.mark.parametrize("name,params", [("smooth", {}), ("interface_smooth", {"jump_ratio": 100.0})])
def test_exact_energy(name, params):
    problem = get_problem(name, **params)
    mesh = problem.base_mesh(16)
    rule = quadrature(10)
    x = physical_points(mesh, rule.ref_points).reshape(-1, 2)
    density = problem.alpha_at(x) * np.sum(problem.exact_grad_u(x) ** 2, axis=1)
    energy = np.einsum("q,kq->k", rule.weights, density.reshape(mesh.n_triangles, -1)).dot(mesh.det)
    assert np.sqrt(energy) == pytest.approx(problem.exact_energy, rel=1e-8)


def test_kellogg_dirichlet_data_and_regularity(kellogg_problem):
    mesh = kellogg_problem.base_mesh(8)
    assert sorted(np.unique(mesh.subdomain_ids)) == [0, 1, 2, 3]
    assert len(mesh.interface_edges) == 16
    points = np.array([[0.5, 0.5], [-0.3, 0.7], [0.2, -0.9]])
    assert np.allclose(kellogg_problem.g(points), kellogg_problem.exact_u(points))
    # u = r^gamma mu(theta)
    assert np.allclose(kellogg_problem.exact_u(0.25 * points), 0.25 ** 0.5 * kellogg_problem.exact_u(points))

    low, high = classify_elements(mesh, kellogg_problem)
    assert low.sum() == 6
    assert np.all(low == ~high)
    assert np.all(mesh.triangles_touching((0.0, 0.0)) == np.flatnonzero(low))
    assert np.all(kellogg_problem.regularity(mesh)[low] == 0.5)


def test_smooth_problem_has_no_low_regularity_elements(smooth_problem):
    mesh = smooth_problem.base_mesh(4)
    low, _ = classify_elements(mesh, smooth_problem)
    assert not low.any()
