import os
import sys
import json
import logging

import pandas as pd

from arg_handler import arg_handler_study
from mixfem import MixfemError, StudyConfig, run_study, read_mesh
from mixfem.study import recompute_rates
from mixfem.utils import limited_threads, save_json

logger = logging.getLogger(__name__)


def _error_record(error, output_dir):
    record = {"error": type(error).__name__, "message": str(error)}
    if output_dir:
        save_json(record, os.path.join(output_dir, "error.json"))
    return record


def run(opts):
    output_dir = opts.output_dir
    try:
        config = StudyConfig.from_yaml(opts.config)
        if opts.output_dir is not None:
            config.output_dir = opts.output_dir
        if opts.solver is not None:
            config.solver = opts.solver
        output_dir = config.output_dir
        frame = run_study(config)
    except MixfemError as error:
        if output_dir is None:
            output_dir = os.path.join("results", os.path.splitext(os.path.basename(opts.config))[0])
        _error_record(error, output_dir)
        logger.error("%s: %s", type(error).__name__, error)
        return 1
    print(frame.to_string(index=False))
    return 0


def rates(opts):
    frame = pd.read_csv(opts.table)
    try:
        frame = recompute_rates(frame, kind="dofs" if opts.dofs else "h")
    except (MixfemError, ValueError) as error:
        logger.error("%s: %s", type(error).__name__, error)
        return 1
    if opts.output:
        frame.to_csv(opts.output, index=False, float_format="%.12e")
        logger.info("  Rates written to:       %s", opts.output)
    else:
        print(frame.to_string(index=False))
    return 0


def mesh_info(opts):
    try:
        mesh = read_mesh(opts.mesh)
    except (MixfemError, ValueError) as error:
        logger.error("%s: %s", type(error).__name__, error)
        print(json.dumps({"error": type(error).__name__, "message": str(error)}))
        return 1
    print(json.dumps(mesh.summary(), indent=2, sort_keys=True))
    return 0


COMMANDS = {"run": run, "rates": rates, "mesh-info": mesh_info}


def main(args=None):
    opts = arg_handler_study(args)
    logging.basicConfig(
        format="[%(asctime)s] %(levelname)-8s %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        level=logging.DEBUG if opts.debug else logging.INFO,
    )
    with limited_threads():
        return COMMANDS[opts.command](opts)


if __name__ == "__main__":
    sys.exit(main())
