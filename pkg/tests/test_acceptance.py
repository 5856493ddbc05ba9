"""
Convergence and robustness studies on the benchmark problems. Deselected by default; run with

    pytest -m slow
"""
import json
import os

import numpy as np
import pandas as pd
import pytest

from mixfem import (
    SpaceDescriptor,
    StudyConfig,
    assemble_system,
    build_coefficient,
    compute_norms,
    get_problem,
    run_study,
    solve_saddle,
)
from mixfem.study import matched_uniform_size, study_meshes

pytestmark = pytest.mark.slow


def _study(tmp_path, name, **settings):
    output = str(tmp_path / name)
    frame = run_study(StudyConfig(name=name, output_dir=output, **settings))
    with open(os.path.join(output, "report.json")) as f:
        report = json.load(f)
    return frame, report, output


@pytest.mark.parametrize("family,degree,expected", [("RT", 0, 1.0), ("RT", 1, 2.0), ("BDM", 1, 2.0)])
def test_smooth_flux_rates(tmp_path, family, degree, expected):
    frame, report, _ = _study(tmp_path, "smooth_{}{}".format(family, degree), problem="smooth", family=family,
                              degree=degree, base_n=2, levels=5, norms=["flux_l2", "flux_hdiv"], solver_tol=1e-12)
    assert frame["flux_l2_rate"].iloc[-1] == pytest.approx(expected, abs=0.1)
    if (family, degree) == ("RT", 0):
        assert frame["flux_hdiv_rate"].iloc[-1] == pytest.approx(1.0, abs=0.1)
    for level in report["levels"]:
        assert level["best_approximation_ratio"] <= 1.02
        assert level["equilibration_defect"] < 1e-9 * 2.0 * np.pi ** 2


def test_potential_order_gap(tmp_path):
    frame, _, _ = _study(tmp_path, "gap_rt1", problem="smooth", family="RT", degree=1, base_n=2, levels=5,
                         norms=["pot_dg"])
    assert frame["pot_dg_rate"].iloc[-1] == pytest.approx(1.0, abs=0.15)

    frame, _, _ = _study(tmp_path, "gap_rt0", problem="smooth", family="RT", degree=0, base_n=2, levels=5,
                         norms=["pot_dg"])
    assert frame["pot_dg"].iloc[-1] / frame["pot_dg"].iloc[0] > 0.5


@pytest.mark.parametrize("degree,expected", [(0, 1.0), (1, 2.0)])
def test_stenberg_recovery_rates(tmp_path, degree, expected):
    frame, report, _ = _study(tmp_path, "post_rt{}".format(degree), problem="smooth", family="RT", degree=degree,
                              base_n=2, levels=5, norms=["post_dg"], postprocess=True)
    assert frame["post_dg_rate"].iloc[-1] == pytest.approx(expected, abs=0.1)
    assert max(level["mean_defect"] for level in report["levels"]) < 1e-12


def test_interface_robustness(tmp_path):
    flux, post, betas, constants = [], [], [], []
    for ratio in (1.0, 10.0, 1e3, 1e6):
        frame, report, _ = _study(tmp_path, "interface_{:g}".format(ratio), problem="interface_smooth",
                                  jump_ratio=ratio, base_n=2, levels=4, norms=["flux_l2"], postprocess=True,
                                  analysis=True, solver="direct", solver_tol=1e-12)
        flux.append(frame["flux_l2"].values)
        post.append(frame["post_dg"].values)
        for level in report["levels"]:
            assert level["best_approximation_ratio"] <= 1.02
        # the coarsest mesh has no interior vertex away from the interface
        betas += [level["spectral"]["beta"] for level in report["levels"][1:]]
        constants += [level["spectral"]["C_equiv"] for level in report["levels"][1:]]

    flux, post = np.array(flux), np.array(post)
    assert np.all(flux.max(axis=0) < 2.0 * flux.min(axis=0))
    assert np.all(post.max(axis=0) < 2.0 * post.min(axis=0))
    assert max(betas) < 1.1 * min(betas)
    assert max(constants) < 1.1 * min(constants)


def test_kellogg_uniform_rate_and_locality(tmp_path):
    settings = dict(problem="kellogg", gamma=0.5, base_n=8, levels=4, norms=["flux_l2"], solver="direct")
    frame, _, output = _study(tmp_path, "kellogg_uniform", **settings)
    assert frame["flux_l2_rate"].iloc[-1] == pytest.approx(0.5, abs=0.1)

    problem = get_problem("kellogg", gamma=0.5)
    mesh = study_meshes(StudyConfig(**settings), problem)[-1]
    elements = pd.read_csv(os.path.join(output, "elements_level3.csv"))
    errors = elements.sort_values("triangle_id")["err_l2_sq"].values
    near = mesh.triangles_touching((0.0, 0.0))
    assert np.argmax(errors) in near
    area_share = mesh.areas[near].sum() / mesh.areas.sum()
    assert errors[near].sum() / errors.sum() > 100.0 * area_share


def test_kellogg_graded_beats_uniform(tmp_path):
    frame, _, _ = _study(tmp_path, "kellogg_graded", problem="kellogg", gamma=0.5, base_n=16, levels=2,
                         refinement="graded", grading_factor=0.6, grading_passes=12, norms=["flux_l2"],
                         solver="direct")
    graded_dofs = int(frame["n_flux"].iloc[-1])
    graded_error = frame["flux_l2"].iloc[-1]

    desc = SpaceDescriptor("RT", 0)
    n = matched_uniform_size(graded_dofs, desc, tolerance=0.1)
    problem = get_problem("kellogg", gamma=0.5)
    mesh = problem.base_mesh(n)
    coeff = build_coefficient(mesh, problem.alpha_by_subdomain)
    system = assemble_system(mesh, coeff, desc, 0, problem.f, problem.g, problem.singular_points)
    solution = solve_saddle(system, method="direct")
    uniform = compute_norms(mesh, coeff, problem, solution.flux, solution.potential, norms=("flux_l2",))
    assert abs(system.n_flux - graded_dofs) <= 0.1 * graded_dofs
    assert graded_error <= 0.7 * uniform.flux_weighted_l2
