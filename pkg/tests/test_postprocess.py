import numpy as np
import pytest

from mixfem import (
    LocalSingularSystem,
    SpaceDescriptor,
    assemble_system,
    build_coefficient,
    get_problem,
    potential_error_dg,
    rectangle_mesh,
    solve_saddle,
    stenberg_postprocess,
)
from mixfem import postprocess
from mixfem.postprocess import PostField, mean_defect
from mixfem.spaces import evaluate_scalar, physical_points
from mixfem.utils.quadrature import quadrature
from .test_norms import linear_problem


def _solve(mesh, problem, family, degree, pot_degree):
    coeff = build_coefficient(mesh, problem.alpha_by_subdomain)
    system = assemble_system(mesh, coeff, SpaceDescriptor(family, degree), pot_degree, problem.f, problem.g)
    report = solve_saddle(system, tol=1e-12, method="direct")
    return coeff, report.flux, report.potential


@pytest.mark.parametrize("family,degree,pot_degree", [("RT", 0, 0), ("RT", 1, 1)])
def test_linear_potential_reproduced(distorted_mesh, family, degree, pot_degree):
    problem = linear_problem()
    coeff, sigma_h, u_h = _solve(distorted_mesh, problem, family, degree, pot_degree)
    u_star = stenberg_postprocess(distorted_mesh, coeff, sigma_h, u_h, sigma_h.space.degree, problem.f)
    assert isinstance(u_star, PostField)
    assert u_star.degree == degree + 1
    assert u_star.blocks.shape == (distorted_mesh.n_triangles, SpaceDescriptor("D", degree + 1).dim)

    rule = quadrature(3)
    values, _ = evaluate_scalar(distorted_mesh, u_star, rule.ref_points)
    exact = problem.exact_u(physical_points(distorted_mesh, rule.ref_points).reshape(-1, 2))
    assert np.allclose(values, exact.reshape(values.shape), atol=1e-9)


def test_element_means_preserved(smooth_problem):
    mesh = rectangle_mesh(4, 4)
    coeff, sigma_h, u_h = _solve(mesh, smooth_problem, "BDM", 1, 0)
    u_star = stenberg_postprocess(mesh, coeff, sigma_h, u_h, sigma_h.space.degree, smooth_problem.f)
    assert mean_defect(mesh, u_star, u_h).max() < 1e-12


def test_postprocessing_improves_the_potential(smooth_problem):
    mesh = rectangle_mesh(8, 8)
    coeff, sigma_h, u_h = _solve(mesh, smooth_problem, "RT", 1, 1)
    u_star = stenberg_postprocess(mesh, coeff, sigma_h, u_h, sigma_h.space.degree, smooth_problem.f)
    p = smooth_problem
    before = potential_error_dg(mesh, coeff, p.exact_u, p.exact_grad_u, u_h, p.g)
    after = potential_error_dg(mesh, coeff, p.exact_u, p.exact_grad_u, u_star, p.g)
    assert after < 0.5 * before


def test_large_coefficient_jump_is_well_conditioned():
    problem = get_problem("interface_smooth", jump_ratio=1e6)
    mesh = problem.base_mesh(4)
    coeff, sigma_h, u_h = _solve(mesh, problem, "RT", 0, 0)
    u_star = stenberg_postprocess(mesh, coeff, sigma_h, u_h, None, problem.f)
    assert np.all(np.isfinite(u_star.coefficients))
    assert mean_defect(mesh, u_star, u_h).max() < 1e-12


def test_flux_index_must_match(square_mesh, smooth_problem):
    coeff, sigma_h, u_h = _solve(square_mesh, smooth_problem, "RT", 0, 0)
    with pytest.raises(ValueError):
        stenberg_postprocess(square_mesh, coeff, sigma_h, u_h, 1, smooth_problem.f)


def test_ill_conditioned_local_system_rejected(monkeypatch, square_mesh, smooth_problem):
    coeff, sigma_h, u_h = _solve(square_mesh, smooth_problem, "RT", 0, 0)
    monkeypatch.setattr(postprocess, "MAX_CONDITION", 1.0)
    with pytest.raises(LocalSingularSystem):
        stenberg_postprocess(square_mesh, coeff, sigma_h, u_h, 0, smooth_problem.f)


def test_failed_local_solve_rejected(monkeypatch, square_mesh, smooth_problem):
    coeff, sigma_h, u_h = _solve(square_mesh, smooth_problem, "RT", 0, 0)

    def singular(*args, **kwargs):
        raise np.linalg.LinAlgError("Singular matrix")

    monkeypatch.setattr(postprocess.np.linalg, "solve", singular)
    with pytest.raises(LocalSingularSystem):
        stenberg_postprocess(square_mesh, coeff, sigma_h, u_h, 0, smooth_problem.f)
