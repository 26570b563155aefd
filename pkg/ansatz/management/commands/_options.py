"""Arguments shared by the benchmark commands"""
from ansatz.utils.configs import DEFAULT_SIZES
from ansatz.utils.problems import PROBLEMS, TOPOLOGIES


def add_grid_arguments(parser):
    parser.add_argument("--problem", nargs="+", choices=PROBLEMS, default=list(PROBLEMS))
    parser.add_argument("--topology", nargs="+", choices=list(TOPOLOGIES), default=list(TOPOLOGIES))
    parser.add_argument("--n", "--sizes", dest="sizes", nargs="+", type=int,
                        default=list(DEFAULT_SIZES), help="Instance sizes, e.g. --n 8 12 16")


def add_output_arguments(parser):
    parser.add_argument("--output", default=None,
                        help="Output root, defaults to ANSATZ_OUTPUT_ROOT")
    parser.add_argument("--workers", type=int, default=None,
                        help="Parallel runs, defaults to ANSATZ_WORKERS")
