import argparse
import os

#################################################
# Argument parsing helper functions
def existing_file(value):
    if not os.path.isfile(value):
        raise argparse.ArgumentTypeError("%s is not an existing file." % value)
    return value
#################################################

# Argument parsing main function for the study driver
def arg_handler_study(args=None):
    parser = argparse.ArgumentParser(prog='study', usage="usage: %(prog)s {run,rates,mesh-info} [opts]")
    parser.add_argument('--version', action='version', version='%(prog)s 0.1')
    parser.add_argument('--debug', action='store_true', dest='debug', default=False, help='Print debug output.')
    subparsers = parser.add_subparsers(dest='command', metavar='{run,rates,mesh-info}')
    subparsers.required = True

    run = subparsers.add_parser('run', help='Run the convergence study described by a YAML config.')
    run.add_argument('config', action='store', type=existing_file, help='Path to the study config (.yaml)')
    run.add_argument('-o', '--output-dir', action='store', type=str, dest='output_dir', default=None, help='Override the output directory of the config.')
    run.add_argument('--solver', action='store', type=str, dest='solver', default=None, choices=['schur', 'direct'], help='Override the solver method of the config.')

    rates = subparsers.add_parser('rates', help='Recompute the observed rates of a convergence table.')
    rates.add_argument('table', action='store', type=existing_file, help='Path to a table.csv written by "study run"')
    rates.add_argument('--dofs', action='store_true', dest='dofs', default=False, help='Rates against flux DOF counts instead of h_max (graded runs).')
    rates.add_argument('-o', '--output', action='store', type=str, dest='output', default=None, help='Write the updated table here instead of printing it.')

    mesh_info = subparsers.add_parser('mesh-info', help='Print size and quality figures of a node/element mesh file.')
    mesh_info.add_argument('mesh', action='store', type=existing_file, help='Path to the mesh file')

    opts = parser.parse_args(args)
    return opts
