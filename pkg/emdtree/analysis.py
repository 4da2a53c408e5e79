#!/usr/bin/env python3
"""Sweeps and metrics comparing Sinkhorn against the exact EMD.

Every table is a :class:`pandas.DataFrame` assembled from ``OrderedDict``
rows. Gradients are compared in the zero-sum tangent space: the Sinkhorn
subgradient ``log(u) / lambda`` is only defined up to an additive constant,
so both sides are mean centred first.
"""
import multiprocessing
import sys
import time
from collections import OrderedDict
from typing import NamedTuple

import numpy as np
import pandas as pd
from scipy.spatial.distance import cosine

from .chain_emd import (check_chain_metric, chain_emd, chain_emd_grad,
                        to_cost_matrix)
from .distributions import (RandomInstanceSpec, as_vector, check_pair,
                            generate_pair, make_rng, normalize_l1)
from .exact_oracle import check_cost_matrix, exact_emd
from .exceptions import (BadParamsError, BadSizeError, EmdError,
                         LengthMismatchError, ZeroVectorError)
from .sinkhorn import (DEFAULT_TOL, PRECISIONS, SinkhornConfig,
                       epsilon_smooth, sinkhorn)
from .tree_emd import (generate_random_tree, tree_emd, tree_emd_grad,
                       tree_to_cost_matrix)

SWEEP_COLUMNS = ['lambda', 'precision', 'iter_cap', 'sd', 'exact', 'ratio',
                 'angle_deg', 'converged', 'marginal_err']
DEGENERATE_DEVIATION = 0.1
DEFAULT_STEP = 1e-6
DEFAULT_PROFILE_LAMBDAS = (0.5, 1.0, 10.0)


class SweepGrid(NamedTuple):
    """Cells of a Sinkhorn sweep: every (lambda, precision, cap) triple."""
    lambdas: tuple
    iter_caps: tuple = (10_000,)
    precisions: tuple = ('f64',)


def log_grid(low, high, count):
    """Log spaced lambdas from low to high inclusive."""
    if not 0 < low < high or count < 2:
        raise BadParamsError(f'need 0 < low < high and count >= 2, got '
                             f'{low}, {high}, {count}')
    return tuple(np.logspace(np.log10(low), np.log10(high), int(count)))


def check_grid(grid):
    """Validate a SweepGrid."""
    lambdas = np.asarray(grid.lambdas, dtype=np.float64)
    if not len(lambdas) or not grid.iter_caps or not grid.precisions:
        raise BadParamsError('sweep grid must not be empty')
    if np.any(lambdas <= 0) or np.any(np.diff(lambdas) <= 0):
        raise BadParamsError('lambdas must be positive and strictly '
                             'increasing')
    if any(cap < 1 for cap in grid.iter_caps):
        raise BadParamsError('iteration caps must be >= 1')
    unknown = [p for p in grid.precisions if p not in PRECISIONS]
    if unknown:
        raise BadParamsError(f'unknown precision {unknown[0]!r}')
    return grid


def mean_center(v):
    """Project onto the zero-sum tangent space."""
    v = as_vector(v)
    return v - v.mean()


def cosine_angle(a, b):
    """Angle in degrees between two mean centred vectors.

    Arguments:
        a (array_like): first gradient
        b (array_like): second gradient

    Returns:
        float: angle in [0, 180]
    """
    a, b = mean_center(a), mean_center(b)
    if len(a) != len(b):
        raise LengthMismatchError(f'vectors have lengths {len(a)} and '
                                  f'{len(b)}')
    if not np.any(a) or not np.any(b):
        raise ZeroVectorError('cannot take the angle of a zero vector')
    similarity = np.clip(1.0 - cosine(a, b), -1.0, 1.0)
    return float(np.degrees(np.arccos(similarity)))


def projected_direction(n, k):
    """Direction ``delta_jk - 1/N``: move mass into bin k, keep the total."""
    if not 0 <= k < n:
        raise BadSizeError(f'bin {k} outside 0..{n - 1}')
    direction = np.full(n, -1.0 / n)
    direction[k] += 1.0
    return direction


def projected_finite_difference(f, p, h=DEFAULT_STEP):
    """Central differences of f along every projected direction.

    Arguments:
        f (callable): scalar function of a vector
        p (array_like): point to differentiate at
        h (float): step

    Returns:
        numpy.ndarray: directional derivatives, one per bin
    """
    p = as_vector(p)
    grad = np.empty(len(p))
    for k in range(len(p)):
        step = h * projected_direction(len(p), k)
        grad[k] = (f(p + step) - f(p - step)) / (2 * h)
    return grad


def mse_grad(p, q):
    """Gradient of the squared error, ``2 (p - q)``."""
    p, q = check_pair(p, q, check_mass=False)
    return 2 * (p - q)


def oracle_gradient(p, q, m, h=DEFAULT_STEP):
    """Finite difference gradient of the exact EMD.

    Used for cost matrices that are neither chain nor tree induced. The
    step is shrunk so every evaluation point stays non-negative.
    """
    p, q = check_pair(p, q)
    h = min(h, p.min() / 2) if p.min() > 0 else h
    return projected_finite_difference(
        lambda x: exact_emd(np.clip(x, 0, None), q, m)[0], p, h)


def _sweep_cell(cell):
    """One row of a sweep; Sinkhorn errors mark the cell as failed."""
    p, q, m, cfg, exact, exact_grad = cell
    row = OrderedDict({'lambda': cfg.lam,
                       'precision': cfg.precision,
                       'iter_cap': cfg.max_iter,
                       'sd': np.nan,
                       'exact': exact,
                       'ratio': np.nan,
                       'angle_deg': np.nan,
                       'converged': False,
                       'marginal_err': np.nan,
                       'degenerate': False,
                       'failed': False})
    try:
        result = sinkhorn(p, q, m, cfg)
    except EmdError as e:
        print(f'[WARNING] sinkhorn failed at lambda={cfg.lam!r} '
              f'({cfg.precision}, cap {cfg.max_iter}): {e}',
              file=sys.stderr, flush=True)
        row['failed'] = True
        return row
    row['sd'] = result.distance
    row['converged'] = result.converged
    row['marginal_err'] = result.marginal_error
    row['degenerate'] = result.numerically_degenerate
    if exact > 0:
        row['ratio'] = result.distance / exact
    if exact_grad is not None and not result.numerically_degenerate:
        try:
            row['angle_deg'] = cosine_angle(result.subgradient, exact_grad)
        except ZeroVectorError:
            pass
    return row


def run_lambda_sweep(p, q, m, grid, exact_grad=None, tol=DEFAULT_TOL,
                     jobs=1):
    """Sinkhorn distance and gradient against the exact EMD over a grid.

    Arguments:
        p (array_like): strictly positive source distribution
        q (array_like): strictly positive target distribution
        m (array_like): ground cost matrix
        grid (SweepGrid): lambdas, iteration caps and precisions
        exact_grad (array_like): exact EMD gradient; finite differences of
            the oracle when None
        tol (float): Sinkhorn convergence tolerance
        jobs (int): parallel worker processes

    Returns:
        pandas.DataFrame: one row per cell in grid order, with the
        SWEEP_COLUMNS plus ``degenerate`` and ``failed``
    """
    grid = check_grid(grid)
    p, q = check_pair(p, q)
    m = check_cost_matrix(m, len(p))
    exact, _ = exact_emd(p, q, m)
    if exact_grad is None:
        print('[INFO] no closed form gradient given, using finite '
              'differences of the exact EMD', file=sys.stderr, flush=True)
        exact_grad = oracle_gradient(p, q, m)
    else:
        exact_grad = as_vector(exact_grad)
    cells = [(p, q, m, SinkhornConfig(lam=float(lam), max_iter=int(cap),
                                      tol=tol, precision=precision),
              exact, exact_grad)
             for precision in grid.precisions
             for cap in grid.iter_caps
             for lam in grid.lambdas]
    if jobs > 1:
        with multiprocessing.Pool(int(jobs)) as pool:
            rows = pool.map(_sweep_cell, cells)
    else:
        rows = [_sweep_cell(cell) for cell in cells]
    return pd.DataFrame(rows)


def write_sweep(frame, path_or_buf):
    """Write sweep rows as CSV with the sweep header."""
    frame.to_csv(path_or_buf, columns=SWEEP_COLUMNS, index=False,
                 float_format='%.17g')


def _is_degenerate(frame):
    return frame['degenerate'] | ~np.isfinite(frame['sd'].astype(float))


def first_degenerate_lambda(frame, precision, reference=None):
    """Smallest lambda at which a precision breaks down.

    A cell breaks down when its distance is not finite, or, with a
    reference precision, when it deviates from the reference distance at
    the same lambda and cap by more than 10 %.

    Arguments:
        frame (pandas.DataFrame): output of :func:`run_lambda_sweep`
        precision (str): precision to inspect
        reference (str): precision to compare against (optional)

    Returns:
        float: the lambda, ``inf`` when the precision never breaks down
    """
    rows = frame[frame['precision'] == precision].copy()
    bad = _is_degenerate(rows)
    if reference is not None:
        ref = frame[frame['precision'] == reference][['lambda', 'iter_cap',
                                                      'sd']]
        merged = rows.merge(ref, on=['lambda', 'iter_cap'], how='left',
                            suffixes=('', '_ref'))
        sd_ref = merged['sd_ref'].astype(float).to_numpy()
        sd = merged['sd'].astype(float).to_numpy()
        with np.errstate(all='ignore'):
            deviation = np.abs(sd - sd_ref) / np.abs(sd_ref)
        deviates = np.isfinite(sd_ref) & (sd_ref != 0) \
            & ~(deviation <= DEGENERATE_DEVIATION)
        bad = bad.to_numpy() | deviates
    lambdas = rows['lambda'].to_numpy()[np.asarray(bad, dtype=bool)]
    return float(lambdas.min()) if len(lambdas) else np.inf


def gradient_profiles(p, q, metric=None, lambdas=DEFAULT_PROFILE_LAMBDAS,
                      eps=1e-6, max_iter=10_000):
    """Per bin gradients of MSE, EMD, EMD^2 and Sinkhorn on a chain.

    Sinkhorn runs on epsilon smoothed copies of p and q; its gradients are
    mean centred.

    Arguments:
        p (array_like): source distribution
        q (array_like): target distribution
        metric (array_like or None): consecutive costs, None for unit costs
        lambdas (tuple): Sinkhorn regularisation factors
        eps (float): smoothing for Sinkhorn inputs
        max_iter (int): Sinkhorn iteration cap

    Returns:
        pandas.DataFrame: columns bin, p, q, mse, emd, emd2, sd_<lambda>
    """
    p, q = check_pair(p, q)
    costs = check_chain_metric(metric, len(p))
    profiles = OrderedDict()
    profiles['bin'] = np.arange(1, len(p) + 1)
    profiles['p'] = p
    profiles['q'] = q
    profiles['mse'] = mse_grad(p, q)
    profiles['emd'] = chain_emd_grad(p, q, costs, 1)
    profiles['emd2'] = chain_emd_grad(p, q, costs, 2)
    m = to_cost_matrix(costs)
    smooth_p, smooth_q = epsilon_smooth(p, eps), epsilon_smooth(q, eps)
    for lam in lambdas:
        result = sinkhorn(smooth_p, smooth_q, m,
                          SinkhornConfig(lam=float(lam), max_iter=max_iter))
        if result.numerically_degenerate:
            print(f'[WARNING] sinkhorn degenerate at lambda={lam!r}',
                  file=sys.stderr, flush=True)
        profiles[f'sd_{lam:g}'] = mean_center(result.subgradient)
    return pd.DataFrame(profiles)


def timing_comparison(tree, n_evals=512, sinkhorn_runs=None, max_iter=100,
                      lam=3.0, seed=0):
    """Wall clock per evaluation: closed form tree gradient vs Sinkhorn.

    Both run sequentially on the same random pair; Sinkhorn uses the leaf
    cost matrix of the tree.

    Arguments:
        tree (MetricTree): metric tree
        n_evals (int): closed form gradient evaluations
        sinkhorn_runs (int): Sinkhorn runs, default n_evals
        max_iter (int): Sinkhorn iteration cap
        lam (float): Sinkhorn regularisation factor
        seed (int): seed of the random pair

    Returns:
        OrderedDict: n_leaves, n_nodes, closed_form_seconds,
        sinkhorn_seconds (both per evaluation) and speedup
    """
    sinkhorn_runs = n_evals if sinkhorn_runs is None else sinkhorn_runs
    if n_evals < 1 or sinkhorn_runs < 1:
        raise BadParamsError('need at least one evaluation of each kind')
    p, q = generate_pair(RandomInstanceSpec(tree.n_leaves, 'easy', seed))
    m = tree_to_cost_matrix(tree)
    cfg = SinkhornConfig(lam=lam, max_iter=max_iter)

    start = time.perf_counter()
    for _ in range(n_evals):
        tree_emd_grad(tree, p, q, 1)
    closed_form = (time.perf_counter() - start) / n_evals

    start = time.perf_counter()
    for _ in range(sinkhorn_runs):
        sinkhorn(p, q, m, cfg)
    reference = (time.perf_counter() - start) / sinkhorn_runs

    return OrderedDict({'n_leaves': tree.n_leaves,
                        'n_nodes': len(tree.node_ids),
                        'closed_form_seconds': closed_form,
                        'sinkhorn_seconds': reference,
                        'speedup': reference / closed_form})


def oracle_equivalence(cases, seed=0, max_bins=16, max_leaves=12,
                       tolerance=1e-9):
    """Compare closed form rho = 1 distances with the exact oracle.

    Even cases are chains with random consecutive costs, odd cases random
    trees; every instance is derived from ``seed``.

    Arguments:
        cases (int): number of random instances
        seed (int): seed of the instance stream
        max_bins (int): largest chain
        max_leaves (int): largest tree
        tolerance (float): allowed absolute difference

    Returns:
        pandas.DataFrame: kind, n_bins, closed_form, oracle, match
    """
    if cases < 1 or max_bins < 2 or max_leaves < 2:
        raise BadParamsError('need cases >= 1 and at least 2 bins/leaves')
    rng = make_rng(seed)
    rows = []
    for case in range(cases):
        if case % 2 == 0:
            n = int(rng.integers(2, max_bins + 1))
            costs = rng.uniform(0.5, 2.0, n - 1)
            m = to_cost_matrix(costs)
            p, q = _random_pair(rng, n)
            closed = chain_emd(p, q, costs, 1)
            kind = 'chain'
        else:
            n = int(rng.integers(2, max_leaves + 1))
            tree = generate_random_tree(n, max_depth=4,
                                        cost_range=(0.5, 2.0),
                                        seed=int(rng.integers(2 ** 32)))
            m = tree_to_cost_matrix(tree)
            p, q = _random_pair(rng, n)
            closed = tree_emd(tree, p, q, 1)
            kind = 'tree'
        oracle, _ = exact_emd(p, q, m)
        rows.append(OrderedDict({'kind': kind,
                                 'n_bins': n,
                                 'closed_form': closed,
                                 'oracle': oracle,
                                 'match': abs(closed - oracle) <= tolerance}))
    return pd.DataFrame(rows)


def _random_pair(rng, n):
    return normalize_l1(rng.random(n)), normalize_l1(rng.random(n))
