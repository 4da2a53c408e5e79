#!/usr/bin/env python3
import argparse
import os
import sys
from datetime import datetime

import numpy as np
import pandas as pd

from . import __version__
from .analysis import (DEFAULT_PROFILE_LAMBDAS, SweepGrid,
                       first_degenerate_lambda, gradient_profiles, log_grid,
                       oracle_equivalence, run_lambda_sweep,
                       timing_comparison, write_sweep)
from .chain_emd import (chain_emd, chain_emd2_hessian, chain_emd_grad,
                        read_chain_metric, to_cost_matrix, unit_metric)
from .descent import DEFAULT_BINS, LOSSES, DescentConfig, run_batch
from .distributions import (RandomInstanceSpec, generate_pair, normalize_l1,
                            read_distribution, write_distribution)
from .exact_oracle import exact_emd, read_cost_matrix, write_plan
from .exceptions import EmdError
from .sinkhorn import (DEFAULT_TOL, PRECISIONS, SinkhornConfig,
                       epsilon_smooth, sinkhorn)
from .tree_emd import (generate_random_tree, read_tree, tree_emd,
                       tree_emd_grad, tree_to_cost_matrix, write_tree)

EXIT_DEGENERATE = 2


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.exit(f'[ERROR] {self.prog}: {message}')


def positive_float(value):
    try:
        number = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f'{value!r} is not a number')
    if not number > 0:
        raise argparse.ArgumentTypeError(f'{value!r} must be positive')
    return number


def positive_int(value):
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f'{value!r} is not an integer')
    if number < 1:
        raise argparse.ArgumentTypeError(f'{value!r} must be >= 1')
    return number


def rho_value(value):
    try:
        number = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f'{value!r} is not a number')
    if not number >= 1:
        raise argparse.ArgumentTypeError(f'rho must be >= 1, got {value!r}')
    return number


def positive_list(convert):
    """Parse a comma separated list with the given element type."""
    def parse(value):
        return tuple(convert(item) for item in value.split(',') if item)
    return parse


def precision_list(value):
    precisions = tuple(item for item in value.split(',') if item)
    unknown = [p for p in precisions if p not in PRECISIONS]
    if unknown or not precisions:
        raise argparse.ArgumentTypeError(f'precisions must be from '
                                         f'{", ".join(PRECISIONS)}')
    return precisions


def add_space_args(parser, cost_matrix=False):
    """Flags selecting the ground space."""
    space = parser.add_mutually_exclusive_group()
    space.add_argument('--tree',
                       help='Tree file (child parent cost per line).',
                       metavar='PATH')
    space.add_argument('--metric',
                       help=('Chain metric file (one consecutive cost per '
                             'line). Default: unit costs'),
                       metavar='PATH')
    if cost_matrix:
        space.add_argument('--cost-matrix',
                           help='CSV ground cost matrix.',
                           metavar='PATH')
    parser.add_argument('--allow-zero-cost',
                        help='Accept zero cost tree edges. Default: False',
                        action='store_true',
                        default=False)


def add_pair_args(parser, required=True):
    parser.add_argument('--p',
                        help='Source distribution file.',
                        required=required,
                        metavar='PATH')
    parser.add_argument('--q',
                        help='Target distribution file.',
                        required=required,
                        metavar='PATH')


def add_out_arg(parser, help_text='Output CSV. Default: stdout'):
    parser.add_argument('-o', '--out',
                        help=help_text,
                        metavar='')


def parse_args(args):
    """Parse Arguments

    Arguments:
        args (List): List of args supplied to script.

    Returns:
        Namespace: assigned args

    """
    description = ('Closed form earth mover\'s distances, gradients and '
                   'Hessians on chain and tree spaces,\ncompared with '
                   'Sinkhorn and an exact transport oracle.\n')
    fmt = argparse.RawDescriptionHelpFormatter
    parser = ArgumentParser(description=description, formatter_class=fmt)
    subparsers = parser.add_subparsers(title='emdtree subcommands',
                                       metavar='',
                                       dest='cmd')

    dist = subparsers.add_parser(
        'dist', help='Closed form EMD^rho.', formatter_class=fmt,
        epilog='example: emdtree dist --tree hybrid.tree --p p.txt --q q.txt '
               '--rho 2')
    add_space_args(dist)
    add_pair_args(dist)
    dist.add_argument('--rho',
                      help='Relaxation exponent >= 1. Default: 1',
                      type=rho_value,
                      default=1.0,
                      metavar='')

    grad = subparsers.add_parser(
        'grad', help='Gradient of EMD^rho.',
        formatter_class=fmt,
        epilog='example: emdtree grad --metric chain.txt --p p.txt --q q.txt')
    add_space_args(grad)
    add_pair_args(grad)
    grad.add_argument('--rho',
                      help='Relaxation exponent >= 1. Default: 1',
                      type=rho_value,
                      default=1.0,
                      metavar='')
    grad.add_argument('--raw',
                      help='Plain partial derivatives instead of the l1 '
                           'preserving gradient.',
                      action='store_true')
    add_out_arg(grad, 'Output file. Default: stdout')

    hessian = subparsers.add_parser(
        'hessian', help='Hessian of the rho = 2 chain EMD.',
        formatter_class=fmt,
        epilog='example: emdtree hessian --n 4')
    hessian_size = hessian.add_mutually_exclusive_group(required=True)
    hessian_size.add_argument('--metric',
                              help='Chain metric file.',
                              metavar='PATH')
    hessian_size.add_argument('--n',
                              help='Number of bins (unit costs).',
                              type=positive_int,
                              metavar='N')
    add_out_arg(hessian)

    oracle = subparsers.add_parser(
        'oracle', help='Exact EMD by min-cost flow.', formatter_class=fmt,
        epilog='example: emdtree oracle --cost-matrix m.csv --p p.txt '
               '--q q.txt --plan plan.csv')
    add_space_args(oracle, cost_matrix=True)
    add_pair_args(oracle)
    oracle.add_argument('--plan',
                        help='Write the transport plan to this CSV.',
                        metavar='')
    oracle.add_argument('--max-size',
                        help='Largest problem accepted. Default: 256',
                        type=positive_int,
                        default=256,
                        metavar='')

    sink = subparsers.add_parser(
        'sinkhorn', help='Sinkhorn distance.', formatter_class=fmt,
        epilog='example: emdtree sinkhorn --tree hybrid.tree --p p.txt '
               '--q q.txt --lambda 10 --eps 1e-6')
    add_space_args(sink, cost_matrix=True)
    add_pair_args(sink)
    sink.add_argument('--lambda',
                      help='Regularisation factor.',
                      dest='lam',
                      type=positive_float,
                      required=True,
                      metavar='LAMBDA')
    sink.add_argument('--max-iter',
                      help='Iteration cap. Default: 100',
                      type=positive_int,
                      default=100,
                      metavar='')
    sink.add_argument('--tol',
                      help=f'Convergence tolerance. Default: {DEFAULT_TOL}',
                      type=positive_float,
                      default=DEFAULT_TOL,
                      metavar='')
    sink.add_argument('--precision',
                      help='f32 or f64. Default: f64',
                      choices=list(PRECISIONS),
                      default='f64')
    sink.add_argument('--eps',
                      help='Smooth p and q with eps before running.',
                      type=positive_float,
                      metavar='')
    sink.add_argument('--strict',
                      help='Exit 2 if the result is numerically degenerate.',
                      action='store_true',
                      default=False)

    sweep = subparsers.add_parser(
        'sweep', help='Sinkhorn vs exact EMD over lambda/cap/precision.',
        formatter_class=fmt,
        epilog='example: emdtree sweep --tree t.tree --precisions f64,f32 '
               '--out sweep.csv')
    add_space_args(sweep, cost_matrix=True)
    add_pair_args(sweep, required=False)
    sweep.add_argument('--lambda-min',
                       help='Smallest lambda. Default: 0.1',
                       type=positive_float,
                       default=0.1,
                       metavar='')
    sweep.add_argument('--lambda-max',
                       help='Largest lambda. Default: 100',
                       type=positive_float,
                       default=100.0,
                       metavar='')
    sweep.add_argument('--lambda-count',
                       help='Log spaced lambdas. Default: 16',
                       type=positive_int,
                       default=16,
                       metavar='')
    sweep.add_argument('--iter-caps',
                       help='Comma separated iteration caps. Default: 10000',
                       type=positive_list(positive_int),
                       default=(10_000,),
                       metavar='')
    sweep.add_argument('--precisions',
                       help='Comma separated precisions. Default: f64,f32',
                       type=precision_list,
                       default=('f64', 'f32'),
                       metavar='')
    sweep.add_argument('--tol',
                       help=f'Convergence tolerance. Default: {DEFAULT_TOL}',
                       type=positive_float,
                       default=DEFAULT_TOL,
                       metavar='')
    sweep.add_argument('--eps',
                       help='Smoothing for p and q. Default: 1e-6',
                       type=positive_float,
                       default=1e-6,
                       metavar='')
    sweep.add_argument('--seed',
                       help='Seed of the random pair when --p/--q are '
                            'not given. Default: 0',
                       type=int,
                       default=0,
                       metavar='')
    sweep.add_argument('--jobs',
                       help='Parallel worker processes. Default: 1',
                       type=positive_int,
                       default=1,
                       metavar='')
    sweep.add_argument('--strict',
                       help='Exit 2 if any cell is numerically degenerate.',
                       action='store_true',
                       default=False)
    add_out_arg(sweep)

    profiles = subparsers.add_parser(
        'profiles', help='Per bin MSE/EMD/EMD^2/Sinkhorn gradients.',
        formatter_class=fmt,
        epilog='example: emdtree profiles --p p.txt --q q.txt '
               '--lambdas 0.5,1,10')
    profiles.add_argument('--metric',
                          help='Chain metric file. Default: unit costs',
                          metavar='')
    add_pair_args(profiles)
    profiles.add_argument('--lambdas',
                          help='Comma separated Sinkhorn lambdas. '
                               'Default: 0.5,1,10',
                          type=positive_list(positive_float),
                          default=DEFAULT_PROFILE_LAMBDAS,
                          metavar='')
    profiles.add_argument('--eps',
                          help='Smoothing for Sinkhorn. Default: 1e-6',
                          type=positive_float,
                          default=1e-6,
                          metavar='')
    add_out_arg(profiles)

    descent = subparsers.add_parser(
        'descent', help='Gradient descent toward a target, averaged runs.',
        formatter_class=fmt,
        epilog='example: emdtree descent --setting hard --loss emd1 '
               '--runs 64 --out hard.csv')
    add_space_args(descent)
    descent.add_argument('--setting',
                         help='easy or hard. Default: easy',
                         choices=['easy', 'hard'],
                         default='easy')
    descent.add_argument('--loss',
                         help=f'{", ".join(LOSSES)}. Default: emd2',
                         choices=list(LOSSES),
                         default='emd2')
    descent.add_argument('--n-bins',
                         help=f'Bins of a chain. Default: {DEFAULT_BINS}',
                         type=positive_int,
                         default=DEFAULT_BINS,
                         metavar='')
    descent.add_argument('--epochs',
                         help='Epochs per run. Default: 2000',
                         type=positive_int,
                         default=2000,
                         metavar='')
    descent.add_argument('--runs',
                         help='Runs to average. Default: 64',
                         type=positive_int,
                         default=64,
                         metavar='')
    descent.add_argument('--initial-rate',
                         help='Initial learning rate. Default: 2**20',
                         type=positive_float,
                         default=2.0 ** 20,
                         metavar='')
    descent.add_argument('--seed',
                         help='Seed of the first run. Default: 0',
                         type=int,
                         default=0,
                         metavar='')
    descent.add_argument('--jobs',
                         help='Parallel worker processes. Default: 1',
                         type=positive_int,
                         default=1,
                         metavar='')
    descent.add_argument('--runs-dir',
                         help='Directory for per run trace CSVs.',
                         metavar='')
    add_out_arg(descent)

    gen_tree = subparsers.add_parser(
        'gen-tree', help='Generate a random metric tree.',
        formatter_class=fmt,
        epilog='example: emdtree gen-tree --n-leaves 32 --max-depth 4 '
               '--seed 1 --out t.tree')
    gen_tree.add_argument('--n-leaves',
                          help='Number of leaves.',
                          type=positive_int,
                          required=True,
                          metavar='N')
    gen_tree.add_argument('--max-depth',
                          help='Maximum leaf depth. Default: 8',
                          type=positive_int,
                          default=8,
                          metavar='')
    gen_tree.add_argument('--max-children',
                          help='Maximum children per node. Default: 4',
                          type=positive_int,
                          default=4,
                          metavar='')
    gen_tree.add_argument('--cost-min',
                          help='Smallest edge cost. Default: 1',
                          type=positive_float,
                          default=1.0,
                          metavar='')
    gen_tree.add_argument('--cost-max',
                          help='Largest edge cost. Default: 1',
                          type=positive_float,
                          default=1.0,
                          metavar='')
    gen_tree.add_argument('--seed',
                          help='Random seed. Default: 0',
                          type=int,
                          default=0,
                          metavar='')
    add_out_arg(gen_tree, 'Output tree file. Default: stdout')

    check = subparsers.add_parser(
        'check', help='Closed form vs oracle self-test.',
        formatter_class=fmt,
        epilog='example: emdtree check --cases 200 --seed 1')
    check.add_argument('--cases',
                       help='Random instances. Default: 200',
                       type=positive_int,
                       default=200,
                       metavar='')
    check.add_argument('--seed',
                       help='Random seed. Default: 0',
                       type=int,
                       default=0,
                       metavar='')
    check.add_argument('--max-bins',
                       help='Largest chain or tree. Default: 16',
                       type=positive_int,
                       default=16,
                       metavar='')

    timing = subparsers.add_parser(
        'timing', help='Closed form tree gradient vs Sinkhorn wall clock.',
        formatter_class=fmt,
        epilog='example: emdtree timing --n-leaves 1000 --evals 512')
    timing_tree = timing.add_mutually_exclusive_group()
    timing_tree.add_argument('--tree',
                             help='Tree file.',
                             metavar='PATH')
    timing_tree.add_argument('--n-leaves',
                             help='Leaves of a random tree. Default: 1000',
                             type=positive_int,
                             default=1000,
                             metavar='N')
    timing.add_argument('--evals',
                        help='Closed form evaluations. Default: 512',
                        type=positive_int,
                        default=512,
                        metavar='')
    timing.add_argument('--sinkhorn-runs',
                        help='Sinkhorn runs. Default: same as --evals',
                        type=positive_int,
                        metavar='')
    timing.add_argument('--max-iter',
                        help='Sinkhorn iteration cap. Default: 100',
                        type=positive_int,
                        default=100,
                        metavar='')
    timing.add_argument('--seed',
                        help='Random seed. Default: 0',
                        type=int,
                        default=0,
                        metavar='')

    parser.add_argument('-v', '--version',
                        help='Print version number and exit.',
                        action='version',
                        version=__version__)
    if not args:
        parser.print_help(sys.stderr)
        sys.exit()
    args = parser.parse_args(args)
    if args.cmd is None:
        parser.error('a subcommand is required')
    return args


def create_dir(path):
    """Create a directory if it doesnt already exist."""
    if not os.path.exists(path):
        os.makedirs(path)


def load(reader, path, flag, **kwargs):
    """Read an input file, naming flag and file on failure."""
    try:
        return reader(path, **kwargs)
    except FileNotFoundError:
        sys.exit(f'[ERROR] {flag} {path}: file not found')
    except (OSError, ValueError, pd.errors.ParserError) as e:
        sys.exit(f'[ERROR] {flag} {path}: {e}')


def load_pair(args):
    """Read --p and --q, normalised to unit mass."""
    p = load(read_distribution, args.p, '--p')
    q = load(read_distribution, args.q, '--q')
    try:
        return normalize_l1(p), normalize_l1(q)
    except EmdError as e:
        sys.exit(f'[ERROR] --p/--q: {e}')


def load_space(args):
    """Tree, chain costs or cost matrix selected on the command line.

    Returns:
        tuple: (kind, space) with kind one of tree, chain, matrix; space
        is None for a unit chain
    """
    if getattr(args, 'tree', None):
        return 'tree', load(read_tree, args.tree, '--tree',
                            allow_zero_cost=args.allow_zero_cost)
    if getattr(args, 'cost_matrix', None):
        return 'matrix', load(read_cost_matrix, args.cost_matrix,
                              '--cost-matrix')
    if getattr(args, 'metric', None):
        return 'chain', load(read_chain_metric, args.metric, '--metric')
    return 'chain', None


def cost_matrix(kind, space, n):
    if kind == 'tree':
        return tree_to_cost_matrix(space)
    if kind == 'matrix':
        return space
    return to_cost_matrix(unit_metric(n) if space is None else space)


def exact_gradient(kind, space, p, q):
    if kind == 'tree':
        return tree_emd_grad(space, p, q, 1)
    if kind == 'chain':
        return chain_emd_grad(p, q, space, 1)
    return None


def output(path):
    """Target for results: a path or stdout."""
    return sys.stdout if path in (None, '-') else path


def dist(args):
    kind, space = load_space(args)
    p, q = load_pair(args)
    if kind == 'tree':
        value = tree_emd(space, p, q, args.rho)
    else:
        value = chain_emd(p, q, space, args.rho)
    print(repr(value))


def grad(args):
    kind, space = load_space(args)
    p, q = load_pair(args)
    if kind == 'tree':
        gradient = tree_emd_grad(space, p, q, args.rho,
                                 l1_preserving=not args.raw)
    else:
        gradient = chain_emd_grad(p, q, space, args.rho,
                                  l1_preserving=not args.raw)
    write_distribution(gradient, output(args.out))


def hessian(args):
    if args.metric:
        metric = load(read_chain_metric, args.metric, '--metric')
        n = len(metric) + 1
    else:
        metric, n = None, args.n
    matrix = chain_emd2_hessian(metric, n)
    write_plan(matrix, output(args.out))


def oracle(args):
    kind, space = load_space(args)
    p, q = load_pair(args)
    value, plan = exact_emd(p, q, cost_matrix(kind, space, len(p)),
                            max_size=args.max_size)
    print(repr(value))
    if args.plan:
        write_plan(plan, args.plan)


def run_sinkhorn(args):
    kind, space = load_space(args)
    p, q = load_pair(args)
    if args.eps:
        p, q = epsilon_smooth(p, args.eps), epsilon_smooth(q, args.eps)
    cfg = SinkhornConfig(lam=args.lam, max_iter=args.max_iter, tol=args.tol,
                         precision=args.precision)
    result = sinkhorn(p, q, cost_matrix(kind, space, len(p)), cfg)
    row = pd.DataFrame([{'distance': result.distance,
                         'iterations': result.iterations,
                         'converged': result.converged,
                         'marginal_error': result.marginal_error,
                         'degenerate': result.numerically_degenerate}])
    row.to_csv(sys.stdout, index=False, float_format='%.17g')
    if result.numerically_degenerate:
        print(f'[WARNING] sinkhorn is numerically degenerate at '
              f'lambda={args.lam!r} ({args.precision})',
              file=sys.stderr, flush=True)
        if args.strict:
            return EXIT_DEGENERATE
    return 0


def sweep(args):
    kind, space = load_space(args)
    if args.p or args.q:
        if not (args.p and args.q):
            sys.exit('[ERROR] --p and --q must be given together')
        p, q = load_pair(args)
    else:
        if kind == 'tree':
            n = space.n_leaves
        elif kind == 'matrix':
            n = len(space)
        else:
            n = DEFAULT_BINS if space is None else len(space) + 1
        p, q = generate_pair(RandomInstanceSpec(n, 'easy', args.seed))
    p, q = epsilon_smooth(p, args.eps), epsilon_smooth(q, args.eps)
    grid = SweepGrid(lambdas=log_grid(args.lambda_min, args.lambda_max,
                                      args.lambda_count),
                     iter_caps=args.iter_caps,
                     precisions=args.precisions)
    n_cells = len(grid.lambdas) * len(grid.iter_caps) * len(grid.precisions)
    print(f'[START] {datetime.now().strftime("%H:%M:%S")} Running sweep '
          f'over {n_cells} cells..', file=sys.stderr, flush=True)
    frame = run_lambda_sweep(p, q, cost_matrix(kind, space, len(p)), grid,
                             exact_grad=exact_gradient(kind, space, p, q),
                             tol=args.tol, jobs=args.jobs)
    print(f'[END]   {datetime.now().strftime("%H:%M:%S")} Finished sweep..',
          file=sys.stderr, flush=True)
    write_sweep(frame, output(args.out))
    for precision in grid.precisions:
        lam = first_degenerate_lambda(frame, precision)
        if np.isfinite(lam):
            print(f'[INFO]  {precision} first degenerate at lambda={lam!r}',
                  file=sys.stderr, flush=True)
    if args.strict and frame['degenerate'].any():
        return EXIT_DEGENERATE
    return 0


def profiles(args):
    metric = None
    if args.metric:
        metric = load(read_chain_metric, args.metric, '--metric')
    p, q = load_pair(args)
    table = gradient_profiles(p, q, metric, args.lambdas, args.eps)
    table.to_csv(output(args.out), index=False, float_format='%.17g')


def descent(args):
    kind, space = load_space(args)
    n_bins = args.n_bins
    if kind == 'tree':
        n_bins = space.n_leaves
    elif space is not None:
        n_bins = len(space) + 1
    cfg = DescentConfig(loss=args.loss, initial_rate=args.initial_rate,
                        epochs=args.epochs, runs=args.runs, seed=args.seed)
    spec = RandomInstanceSpec(n_bins=n_bins, setting=args.setting,
                              seed=args.seed)
    print(f'[START] {datetime.now().strftime("%H:%M:%S")} Running '
          f'{args.runs} descent runs..', file=sys.stderr, flush=True)
    mean, traces, excluded = run_batch(spec, cfg, metric=space,
                                       jobs=args.jobs)
    print(f'[END]   {datetime.now().strftime("%H:%M:%S")} Finished descent, '
          f'{len(traces) - len(excluded)}/{len(traces)} runs kept..',
          file=sys.stderr, flush=True)
    mean.to_csv(output(args.out), index=False, float_format='%.17g')
    if args.runs_dir:
        create_dir(args.runs_dir)
        for seed, trace in traces.items():
            trace.to_csv(os.path.join(args.runs_dir, f'run_{seed}.csv'),
                         index=False, float_format='%.17g')


def gen_tree(args):
    tree = generate_random_tree(args.n_leaves, max_depth=args.max_depth,
                                cost_range=(args.cost_min, args.cost_max),
                                seed=args.seed,
                                max_children=args.max_children)
    if args.out in (None, '-'):
        sys.stdout.write(tree.to_text())
    else:
        write_tree(tree, args.out)


def check(args):
    print(f'[START] {datetime.now().strftime("%H:%M:%S")} Comparing '
          f'{args.cases} instances with the oracle..',
          file=sys.stderr, flush=True)
    results = oracle_equivalence(args.cases, args.seed,
                                 max_bins=args.max_bins,
                                 max_leaves=min(args.max_bins, 12))
    matches = int(results['match'].sum())
    print(f'{matches}/{len(results)} oracle matches')
    for _, row in results[~results['match']].iterrows():
        print(f'[WARNING] {row["kind"]} with {row["n_bins"]} bins: closed '
              f'form {row["closed_form"]!r}, oracle {row["oracle"]!r}',
              file=sys.stderr, flush=True)
    if matches != len(results):
        sys.exit(f'[ERROR] {len(results) - matches} instances disagree '
                 f'with the oracle')


def timing(args):
    if args.tree:
        tree = load(read_tree, args.tree, '--tree')
    else:
        tree = generate_random_tree(args.n_leaves, seed=args.seed)
    result = timing_comparison(tree, n_evals=args.evals,
                               sinkhorn_runs=args.sinkhorn_runs,
                               max_iter=args.max_iter, seed=args.seed)
    pd.DataFrame([result]).to_csv(sys.stdout, index=False,
                                  float_format='%.17g')


COMMANDS = {'dist': dist,
            'grad': grad,
            'hessian': hessian,
            'oracle': oracle,
            'sinkhorn': run_sinkhorn,
            'sweep': sweep,
            'profiles': profiles,
            'descent': descent,
            'gen-tree': gen_tree,
            'check': check,
            'timing': timing}


def main(argv=None):
    args = parse_args(sys.argv[1:] if argv is None else argv)
    start_time = datetime.now()
    print(f'[START] {start_time.strftime("%H:%M:%S %Y-%m-%d")}',
          file=sys.stderr, flush=True)
    try:
        status = COMMANDS[args.cmd](args) or 0
    except EmdError as e:
        sys.exit(f'[ERROR] {args.cmd}: {e}')
    end_time = datetime.now()
    run_time = str(end_time - start_time).split('.')[0]
    print(f'[INFO]  {end_time.strftime("%H:%M:%S")} Runtime: {run_time}',
          file=sys.stderr)
    print(f'[END]   {end_time.strftime("%H:%M:%S %Y-%m-%d")}',
          file=sys.stderr, flush=True)
    return status


if __name__ == "__main__":
    sys.exit(main())
