import numpy as np
import pytest

from mixfem import (
    NoConvergence,
    SpaceDescriptor,
    assemble_system,
    build_coefficient,
    get_problem,
    rectangle_mesh,
    solve_saddle,
)
from mixfem import solver
from mixfem.spaces import evaluate_flux, evaluate_scalar
from mixfem.utils.quadrature import quadrature


def _zero(points):
    return np.zeros(len(points))


def _x(points):
    return points[:, 0].copy()


@pytest.mark.parametrize("method", ["schur", "direct"])
def test_linear_solution_is_exact(distorted_mesh, method):
    """ u = x: sigma = (-1, 0) lies in RT0 and u_h is the element mean of x. """
    mesh = distorted_mesh
    coeff = build_coefficient(mesh, {0: 1.0})
    system = assemble_system(mesh, coeff, SpaceDescriptor("RT", 0), 0, _zero, _x)
    report = solve_saddle(system, tol=1e-12, method=method)
    assert report.residual_norm <= 1e-12

    rule = quadrature(2)
    sigma, divergence = evaluate_flux(mesh, report.flux, rule.ref_points)
    assert np.allclose(sigma[..., 0], -1.0, atol=1e-9)
    assert np.allclose(sigma[..., 1], 0.0, atol=1e-9)
    assert np.allclose(divergence, 0.0, atol=1e-9)
    u, _ = evaluate_scalar(mesh, report.potential, rule.ref_points)
    assert np.allclose(u[:, 0], mesh.centroids[:, 0], atol=1e-9)


@pytest.mark.parametrize("family,degree,pot_degree", [("RT", 1, 1), ("BDM", 1, 0)])
def test_schur_and_direct_agree(family, degree, pot_degree):
    problem = get_problem("interface_smooth", jump_ratio=10.0)
    mesh = problem.base_mesh(4)
    coeff = build_coefficient(mesh, problem.alpha_by_subdomain)
    system = assemble_system(mesh, coeff, SpaceDescriptor(family, degree), pot_degree, problem.f, problem.g)
    schur = solve_saddle(system, tol=1e-13, method="schur")
    direct = solve_saddle(system, tol=1e-13, method="direct")
    scale = np.abs(direct.flux.coefficients).max()
    assert np.abs(schur.flux.coefficients - direct.flux.coefficients).max() <= 1e-8 * scale
    scale = np.abs(direct.potential.coefficients).max()
    assert np.abs(schur.potential.coefficients - direct.potential.coefficients).max() <= 1e-8 * scale


def test_solution_satisfies_block_equations(smooth_problem):
    mesh = rectangle_mesh(4, 4)
    coeff = build_coefficient(mesh, {0: 1.0})
    system = assemble_system(mesh, coeff, SpaceDescriptor("RT", 0), 0, smooth_problem.f, smooth_problem.g)
    report = solve_saddle(system, tol=1e-10)
    A, B = system.A.tocsr(), system.B.tocsr()
    sigma, u = report.flux.coefficients, report.potential.coefficients
    assert np.allclose(A.dot(sigma) - B.T.dot(u), system.F_flux, atol=1e-8)
    assert np.allclose(B.dot(sigma), system.F_pot, atol=1e-8)
    assert report.method == "schur"
    assert report.iterations > 0


def test_solver_argument_validation(square_mesh, smooth_problem):
    coeff = build_coefficient(square_mesh, {0: 1.0})
    system = assemble_system(square_mesh, coeff, SpaceDescriptor("RT", 0), 0, smooth_problem.f, smooth_problem.g)
    with pytest.raises(ValueError):
        solve_saddle(system, tol=1e-3)
    with pytest.raises(ValueError):
        solve_saddle(system, tol=1e-16)
    with pytest.raises(ValueError):
        solve_saddle(system, method="gmres")


def test_stalled_schur_iteration_raises(monkeypatch, caplog, square_mesh, smooth_problem):
    coeff = build_coefficient(square_mesh, {0: 1.0})
    system = assemble_system(square_mesh, coeff, SpaceDescriptor("RT", 0), 0, smooth_problem.f, smooth_problem.g)

    def stalled(S, rhs, **kwargs):
        return np.zeros_like(rhs), 1

    monkeypatch.setattr(solver, "cg", stalled)
    with pytest.raises(NoConvergence):
        solve_saddle(system, tol=1e-10, method="schur")
    assert "without reaching" in caplog.text
