from __future__ import absolute_import, division, print_function

import logging
import os
import platform
import time

import numpy as np
import pandas as pd
import yaml
from sklearn.linear_model import LinearRegression

from .__version__ import __version__
from .analysis import spectral_report
from .assembly import assemble_system, check_stable_pair, dump_matrix_market
from .coefficients import build_coefficient
from .elements import SpaceDescriptor
from .exceptions import InvalidConfig, NonPositiveError
from .mesh import RefinementSpec, read_mesh, refine
from .norms import NORM_NAMES, compute_norms, equilibration_defect, flux_error_weighted_l2, write_element_csv
from .postprocess import mean_defect, stenberg_postprocess
from .problems import classify_elements, get_problem, verify_problem
from .solver import METHODS, solve_saddle
from .spaces import interpolate_flux
from .utils.tools import create_missing_folders, save_json

logger = logging.getLogger(__name__)

TABLE_PREFIX = ["level", "n_flux", "n_pot", "h_max"]


class StudyConfig(object):
    """
    Settings of one convergence study, read from a flat YAML mapping.

    Every key below may appear in the file; anything else is rejected.
    """

    DEFAULTS = {
        "name": None,
        "problem": "smooth",
        "jump_ratio": 1000.0,
        "gamma": 0.5,
        "family": "RT",
        "degree": 0,
        "pot_degree": None,
        "alpha": None,
        "mesh_file": None,
        "base_n": 2,
        "refinement": "uniform",
        "levels": 4,
        "base_refinements": 0,
        "graded_center": [0.0, 0.0],
        "grading_factor": 0.5,
        "grading_passes": 8,
        "norms": ["flux_l2", "flux_hdiv", "pot_dg"],
        "postprocess": False,
        "analysis": False,
        "solver": "schur",
        "solver_tol": 1e-10,
        "quad_excess": 4,
        "singular_depth": 6,
        "output_dir": None,
        "seed": 1234,
        "dump_matrices": False,
    }
    INTEGER_KEYS = ("levels", "base_n", "base_refinements", "grading_passes", "quad_excess", "singular_depth", "seed")
    FLOAT_KEYS = ("jump_ratio", "gamma", "grading_factor", "solver_tol")

    def __init__(self, **settings):
        unknown = sorted(set(settings) - set(self.DEFAULTS))
        if unknown:
            raise InvalidConfig("Unknown config key(s): {}".format(", ".join(unknown)))
        values = dict(self.DEFAULTS)
        values.update({k: v for k, v in settings.items() if v is not None})
        for key, value in values.items():
            setattr(self, key, value)
        self._validate()

    def _cast(self, key, cast):
        value = getattr(self, key)
        try:
            if isinstance(value, bool):
                raise TypeError("boolean")
            value = cast(value)
        except (TypeError, ValueError) as err:
            raise InvalidConfig("{} must be {}, got {!r}".format(
                key, "an integer" if cast is int else "a number", getattr(self, key))) from err
        setattr(self, key, value)
        return value

    def _validate(self):
        for key in self.INTEGER_KEYS:
            self._cast(key, int)
        for key in self.FLOAT_KEYS:
            self._cast(key, float)
        if self.name is None:
            self.name = self.problem
        if self.output_dir is None:
            self.output_dir = os.path.join("results", self.name)
        try:
            self.flux_space = SpaceDescriptor(self.family, self.degree)
        except (TypeError, ValueError) as err:
            raise InvalidConfig(str(err)) from err
        if self.pot_degree is None:
            self.pot_degree = self.flux_space.div_degree
        self._cast("pot_degree", int)
        check_stable_pair(self.flux_space, self.pot_degree)

        self.norms = list(self.norms)
        bad = sorted(set(self.norms) - set(NORM_NAMES))
        if bad:
            raise InvalidConfig("Unknown norm(s) {}, expected a subset of {}".format(bad, NORM_NAMES))
        if self.postprocess and "post_dg" not in self.norms:
            self.norms.append("post_dg")
        if "post_dg" in self.norms and not self.postprocess:
            raise InvalidConfig("post_dg requires postprocess: true")

        self.refinement = str(self.refinement).lower()
        if self.refinement not in RefinementSpec.MODES:
            raise InvalidConfig("refinement must be one of {}, got {!r}".format(RefinementSpec.MODES,
                                                                                self.refinement))
        if self.levels < 1:
            raise InvalidConfig("levels must be >= 1, got {}".format(self.levels))
        if self.norms and self.levels < 2:
            raise InvalidConfig("Rates need at least 2 levels, got {}".format(self.levels))
        if self.base_n < 1:
            raise InvalidConfig("base_n must be >= 1, got {}".format(self.base_n))
        if self.refinement == "graded" and not 0.0 < self.grading_factor < 1.0:
            raise InvalidConfig("grading_factor must lie in (0, 1), got {}".format(self.grading_factor))
        if self.solver not in METHODS:
            raise InvalidConfig("solver must be one of {}, got {!r}".format(METHODS, self.solver))
        if not 1e-14 <= self.solver_tol <= 1e-6:
            raise InvalidConfig("solver_tol must lie in [1e-14, 1e-6], got {}".format(self.solver_tol))
        try:
            center = [float(c) for c in self.graded_center]
        except (TypeError, ValueError) as err:
            raise InvalidConfig("graded_center must be a pair of numbers, got {!r}".format(self.graded_center)) from err
        if len(center) != 2:
            raise InvalidConfig("graded_center must be a pair, got {}".format(self.graded_center))
        self.graded_center = center
        if self.alpha is not None:
            try:
                self.alpha = {int(k): float(v) for k, v in dict(self.alpha).items()}
            except (TypeError, ValueError) as err:
                raise InvalidConfig("alpha must map subdomain ids to numbers, got {!r}".format(self.alpha)) from err

    @classmethod
    def from_yaml(cls, filename):
        with open(filename) as f:
            try:
                settings = yaml.safe_load(f)
            except yaml.YAMLError as err:
                raise InvalidConfig("{} is not valid YAML: {}".format(filename, err)) from err
        if settings is None:
            settings = {}
        if not isinstance(settings, dict):
            raise InvalidConfig("{} does not hold a key-value mapping".format(filename))
        return cls(**settings)

    def problem_params(self):
        if self.problem == "interface_smooth":
            return {"jump_ratio": self.jump_ratio}
        if self.problem == "kellogg":
            return {"gamma": self.gamma}
        return {}

    def as_dict(self):
        out = {key: getattr(self, key) for key in self.DEFAULTS}
        out["flux_space"] = repr(self.flux_space)
        return out

    def __repr__(self):
        return "StudyConfig({})".format(self.name)


class ConvergenceTable(object):
    """ Per-level errors and observed rates, stored as a DataFrame with columns level, n_flux, n_pot, h_max,
    <norm>, <norm>_rate. """

    def __init__(self, norms, kind="h"):
        self.norms = list(norms)
        self.kind = kind
        self.rows = []

    def add(self, level, n_flux, n_pot, h_max, errors):
        row = {"level": level, "n_flux": n_flux, "n_pot": n_pot, "h_max": h_max}
        for norm in self.norms:
            row[norm] = errors[norm]
        self.rows.append(row)

    @property
    def columns(self):
        columns = list(TABLE_PREFIX)
        for norm in self.norms:
            columns += [norm, norm + "_rate"]
        return columns

    def frame(self):
        frame = pd.DataFrame(self.rows, columns=[c for c in self.columns if not c.endswith("_rate")])
        return _with_rates(frame, self.norms, self.kind)[self.columns]

    def to_csv(self, filename):
        create_missing_folders([os.path.dirname(filename)])
        self.frame().to_csv(filename, index=False, float_format="%.12e")


def _with_rates(frame, norms, kind):
    frame = frame.copy()
    reference = frame["h_max"].values if kind == "h" else frame["n_flux"].values
    for norm in norms:
        rates = np.full(len(frame), np.nan)
        if len(frame) >= 2:
            rates[1:] = observed_rates(frame[norm].values, reference, kind)
        frame[norm + "_rate"] = rates
    return frame


def observed_rates(errors, h_or_dofs=None, kind="h"):
    """
    Pairwise convergence rates between consecutive levels.

    Parameters
    ----------
    errors : sequence of float
        At least two positive values.
    h_or_dofs : sequence of float, optional
        Mesh sizes (kind="h") or DOF counts (kind="dofs"); mesh sizes default to halving per level.
    kind : {"h", "dofs"}
        "h": log(e_l / e_{l+1}) / log(h_l / h_{l+1}); "dofs": 2 log(e_l / e_{l+1}) / log(N_{l+1} / N_l)
        (rate with respect to an equivalent mesh size in 2D).
    """
    errors = np.asarray(errors, dtype=float)
    if errors.ndim != 1 or len(errors) < 2:
        raise ValueError("observed_rates needs at least 2 error values, got {}".format(len(np.atleast_1d(errors))))
    if np.any(~(errors > 0)):
        raise NonPositiveError("Errors must be positive to compute rates, got {}".format(errors))
    ratio = np.log(errors[:-1] / errors[1:])
    if kind == "h":
        if h_or_dofs is None:
            return ratio / np.log(2.0)
        h = np.asarray(h_or_dofs, dtype=float)
        return ratio / np.log(h[:-1] / h[1:])
    if kind == "dofs":
        if h_or_dofs is None:
            raise ValueError("DOF-based rates need the DOF counts")
        n = np.asarray(h_or_dofs, dtype=float)
        return -2.0 * ratio / np.log(n[:-1] / n[1:])
    raise ValueError("kind must be 'h' or 'dofs', got {!r}".format(kind))


def fitted_rate(errors, h_or_dofs, kind="h"):
    """ Least-squares slope of log(error) over all levels, in the same convention as `observed_rates`. """
    errors = np.asarray(errors, dtype=float)
    if len(errors) < 2:
        raise ValueError("fitted_rate needs at least 2 error values")
    if np.any(~(errors > 0)):
        raise NonPositiveError("Errors must be positive to fit a rate, got {}".format(errors))
    x = np.log(np.asarray(h_or_dofs, dtype=float)).reshape(-1, 1)
    model = LinearRegression().fit(x, np.log(errors))
    slope = float(model.coef_[0])
    return slope if kind == "h" else -2.0 * slope


def matched_uniform_size(target_flux_dofs, flux_desc, tolerance=0.1):
    """
    Even n for which the structured n x n mesh carries a flux space within `tolerance` (relative) of
    `target_flux_dofs` DOFs. An n x n mesh has 3n^2 + 2n edges and 2n^2 triangles.
    """
    best, best_gap = None, np.inf
    n = 2
    while True:
        dofs = (3 * n * n + 2 * n) * flux_desc.n_edge_dofs + 2 * n * n * flux_desc.n_interior_dofs
        gap = abs(dofs - target_flux_dofs) / float(target_flux_dofs)
        if gap < best_gap:
            best, best_gap = n, gap
        if dofs > target_flux_dofs:
            break
        n += 2
    if best_gap > tolerance:
        raise ValueError("No even n matches {} flux DOFs within {:.0%} (closest n={} off by {:.1%})".format(
            target_flux_dofs, tolerance, best, best_gap))
    return best


def recompute_rates(frame, kind="h"):
    """ Recompute every <norm>_rate column of a convergence table. """
    norms = [c[:-len("_rate")] for c in frame.columns if c.endswith("_rate") and c[:-len("_rate")] in frame]
    if len(frame) < 2:
        raise ValueError("A table with {} row(s) has no rates".format(len(frame)))
    return _with_rates(frame, norms, kind)


# ----------------------------------------------------------------------
# driver

def study_meshes(config, problem):
    """ The mesh of every level of a study. """
    if config.mesh_file:
        base = read_mesh(config.mesh_file, subdomain_of=problem.subdomain_of)
    else:
        base = problem.mesh_factory(int(config.base_n))
    if config.base_refinements:
        base = refine(base, RefinementSpec("uniform", int(config.base_refinements)))

    meshes = []
    for level in range(config.levels):
        mesh = base if level == 0 else refine(base, RefinementSpec("uniform", level))
        if config.refinement == "graded":
            mesh = refine(mesh, RefinementSpec("graded", int(config.grading_passes) + 2 * level,
                                               config.graded_center, float(config.grading_factor)))
        meshes.append(mesh)
    return meshes


def _alpha_layout(config, problem):
    if config.alpha is None:
        return problem.alpha_by_subdomain
    return dict(config.alpha)


def run_level(config, problem, mesh, level):
    """ Solve one level and evaluate everything the config asks for; returns (errors, record). """
    flux_desc = config.flux_space
    start = time.time()
    coeff = build_coefficient(mesh, _alpha_layout(config, problem))
    singular = problem.singular_points
    depth = int(config.singular_depth)

    system = assemble_system(mesh, coeff, flux_desc, config.pot_degree, problem.f, problem.g, singular, depth)
    if config.dump_matrices:
        dump_matrix_market(system, os.path.join(config.output_dir, "matrices_level{}".format(level)))
    solution = solve_saddle(system, tol=config.solver_tol, method=config.solver)
    sigma_h, u_h = solution.flux, solution.potential

    interpolant = interpolate_flux(mesh, flux_desc, problem.exact_sigma, int(config.quad_excess), singular)
    interpolant_error = flux_error_weighted_l2(mesh, coeff, problem.exact_sigma, interpolant, singular, depth)

    record = {
        "level": level,
        "mesh": mesh.summary(),
        "n_flux": system.n_flux,
        "n_pot": system.n_pot,
        "solver": {"method": solution.method, "residual": solution.residual_norm,
                   "iterations": solution.iterations, "wall_time": solution.wall_time},
        "interpolant_flux_l2": interpolant_error,
        "equilibration_defect": equilibration_defect(mesh, problem.f, sigma_h),
    }

    u_star = None
    if config.postprocess:
        u_star = stenberg_postprocess(mesh, coeff, sigma_h, u_h, flux_desc.degree, problem.f,
                                      singular_points=singular, depth=depth)
        record["mean_defect"] = float(mean_defect(mesh, u_star, u_h).max())

    report = compute_norms(mesh, coeff, problem, sigma_h, u_h, config.norms, u_star=u_star,
                           interpolant=interpolant, depth=depth)
    record["norms"] = report.values
    if "flux_l2" in report.values and interpolant_error > 0:
        record["best_approximation_ratio"] = report.values["flux_l2"] / interpolant_error

    low, _ = classify_elements(mesh, problem)
    record["class_totals"] = report.class_totals(low)
    record["n_low"] = int(low.sum())
    element_file = os.path.join(config.output_dir, "elements_level{}.csv".format(level))
    write_element_csv(report, element_file)
    record["element_csv"] = os.path.basename(element_file)

    if config.analysis:
        record["spectral"] = spectral_report(mesh, coeff, flux_desc, config.pot_degree, level).as_dict()

    record["wall_time"] = time.time() - start
    for name, value in sorted(report.values.items()):
        logger.info("  Level %s %-12s %.6e", level, name + ":", value)
    return report.values, record


def run_study(config):
    """
    Run a convergence study and write table.csv, report.json and elements_level<l>.csv into config.output_dir.

    Returns
    -------
    pandas.DataFrame
        The convergence table.
    """
    logger.info("Starting study %s", config.name)
    logger.info("  Problem:                %s %s", config.problem, config.problem_params())
    logger.info("  Spaces:                 %s x D%s", config.flux_space, config.pot_degree)
    logger.info("  Refinement:             %s, %s levels", config.refinement, config.levels)
    logger.info("  Output:                 %s", config.output_dir)
    create_missing_folders([config.output_dir])
    start = time.time()

    problem = get_problem(config.problem, **config.problem_params())
    checks = verify_problem(problem, seed=config.seed)

    kind = "h" if config.refinement == "uniform" else "dofs"
    table = ConvergenceTable(config.norms, kind)
    records = []
    for level, mesh in enumerate(study_meshes(config, problem)):
        logger.info("Level %s: %r", level, mesh)
        errors, record = run_level(config, problem, mesh, level)
        table.add(level, record["n_flux"], record["n_pot"], float(mesh.h_K.max()), errors)
        records.append(record)

    table_file = os.path.join(config.output_dir, "table.csv")
    table.to_csv(table_file)
    frame = table.frame()

    fitted = {}
    if len(frame) >= 2:
        reference = frame["h_max"].values if kind == "h" else frame["n_flux"].values
        for norm in config.norms:
            fitted[norm] = fitted_rate(frame[norm].values, reference, kind)

    report = {
        "config": config.as_dict(),
        "version": __version__,
        "python": platform.python_version(),
        "problem": {"name": problem.name, "params": problem.params, "checks": checks},
        "rate_kind": kind,
        "levels": records,
        "rates": {norm: frame[norm + "_rate"].tolist()[1:] for norm in config.norms},
        "fitted_rates": fitted,
        "table": os.path.basename(table_file),
        "wall_time": time.time() - start,
    }
    if config.analysis:
        report["spectral_sweep"] = [r["spectral"] for r in records]
    save_json(report, os.path.join(config.output_dir, "report.json"))
    logger.info("Study %s finished in %.1f s", config.name, report["wall_time"])
    return frame
