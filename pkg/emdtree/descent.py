#!/usr/bin/env python3
"""Gradient descent toy experiment.

A source distribution is pushed toward a target with

    p_{t+1} = p_t - rate_t * grad loss(p_t, q)

where the rate is picked on a geometric grid by a line search on the loss
being optimized, and the rho = 1 distance to the target is reported as the
error. l1 preserving gradients keep the total mass of the iterate at 1; the
``_raw`` losses use the plain partial derivatives and let the mass drift.
Iterates may go negative, which the trace records through ``min_entry``
instead of projecting.
"""
import multiprocessing
import sys
from collections import OrderedDict
from functools import partial
from typing import NamedTuple

import numpy as np
import pandas as pd

from .chain_emd import chain_emd, chain_emd_grad, check_chain_metric
from .distributions import RandomInstanceSpec, check_pair, generate_pair
from .exceptions import BadParamsError, NonFiniteError
from .tree_emd import MetricTree, tree_emd, tree_emd_grad


class Loss(NamedTuple):
    """EMD^rho, optionally with plain gradients or an added squared error."""
    rho: float
    l1_preserving: bool = True
    mse_weight: float = 0.0


LOSSES = OrderedDict([
    ('emd1', Loss(1)),
    ('emd2', Loss(2)),
    ('emd1_raw', Loss(1, l1_preserving=False)),
    ('emd2_raw', Loss(2, l1_preserving=False)),
    ('emd2_mse', Loss(2, mse_weight=1.0)),
])
DEFAULT_BINS = 64
TRACE_COLUMNS = ['epoch', 'emd_error', 'loss', 'learning_rate',
                 'total_mass', 'min_entry', 'status']
MEAN_COLUMNS = ['epoch', 'mean_error', 'mean_rate', 'mean_mass']


class DescentConfig(NamedTuple):
    """Descent parameters; defaults give the 64 run, 2000 epoch experiment."""
    loss: str = 'emd2'
    initial_rate: float = 2.0 ** 20
    backtrack_factor: float = 2.0 ** 0.5
    epochs: int = 2000
    runs: int = 64
    seed: int = 0
    rate_floor: float = 2.0 ** -60
    rate_ceiling: float = 2.0 ** 60


def check_config(cfg):
    """Validate a DescentConfig."""
    if cfg.loss not in LOSSES:
        raise BadParamsError(f'unknown loss {cfg.loss!r}, expected one of '
                             f'{", ".join(LOSSES)}')
    if not cfg.initial_rate > 0:
        raise BadParamsError('initial rate must be positive')
    if not cfg.backtrack_factor > 1:
        raise BadParamsError('backtrack factor must be > 1')
    if cfg.epochs < 1 or cfg.runs < 1:
        raise BadParamsError('epochs and runs must be >= 1')
    if not 0 < cfg.rate_floor < cfg.rate_ceiling:
        raise BadParamsError('need 0 < rate floor < rate ceiling')
    return cfg


def loss_functions(metric, n):
    """Distance and gradient functions for a chain or a tree.

    Arguments:
        metric: MetricTree, chain costs, or None for a unit chain
        n (int): number of bins

    Returns:
        tuple: (distance(p, q, rho), gradient(p, q, rho, l1_preserving)),
        both skipping the unit mass check
    """
    if isinstance(metric, MetricTree):
        return (partial(_tree_distance, metric),
                partial(_tree_gradient, metric))
    costs = check_chain_metric(metric, n)
    return (partial(_chain_distance, costs), partial(_chain_gradient, costs))


def _tree_distance(tree, p, q, rho):
    return tree_emd(tree, p, q, rho, check_mass=False)


def _tree_gradient(tree, p, q, rho, l1_preserving=True):
    return tree_emd_grad(tree, p, q, rho, check_mass=False,
                         l1_preserving=l1_preserving)


def _chain_distance(costs, p, q, rho):
    return chain_emd(p, q, costs, rho, check_mass=False)


def _chain_gradient(costs, p, q, rho, l1_preserving=True):
    return chain_emd_grad(p, q, costs, rho, check_mass=False,
                          l1_preserving=l1_preserving)


def loss_value(distance, loss, p, q):
    """Value of a Loss at p."""
    value = distance(p, q, loss.rho)
    if loss.mse_weight:
        value += loss.mse_weight * float(np.sum((p - q) ** 2))
    return value


def loss_gradient(gradient, loss, p, q):
    """Gradient of a Loss at p."""
    grad = gradient(p, q, loss.rho, loss.l1_preserving)
    if loss.mse_weight:
        grad = grad + loss.mse_weight * 2 * (p - q)
    return grad


def line_search(objective, p, grad, rate, cfg):
    """Search the rate grid ``rate * factor**k`` along -grad.

    If the starting rate lowers the objective the rate is scaled up while
    the objective keeps falling, otherwise it is scaled down until the
    objective falls and then while it keeps falling. Rates stay within
    ``[cfg.rate_floor, cfg.rate_ceiling]``.

    Arguments:
        objective (callable): loss of a candidate iterate
        p (numpy.ndarray): current iterate
        grad (numpy.ndarray): gradient at p
        rate (float): starting rate
        cfg (DescentConfig): grid factor and bounds

    Returns:
        tuple: (rate, candidate, value), or None if no rate on the grid
        lowers the objective
    """
    current = objective(p)
    factor = cfg.backtrack_factor

    def trial(r):
        candidate = p - r * grad
        value = objective(candidate)
        return candidate, (value if np.isfinite(value) else np.inf)

    candidate, value = trial(rate)
    if value < current:
        while rate * factor <= cfg.rate_ceiling:
            larger, larger_value = trial(rate * factor)
            if not larger_value < value:
                break
            rate, candidate, value = rate * factor, larger, larger_value
        return rate, candidate, value

    while not value < current:
        rate /= factor
        if rate < cfg.rate_floor:
            return None
        candidate, value = trial(rate)
    while rate / factor >= cfg.rate_floor:
        smaller, smaller_value = trial(rate / factor)
        if not smaller_value < value:
            break
        rate, candidate, value = rate / factor, smaller, smaller_value
    return rate, candidate, value


def _record(epoch, error, value, rate, p, status):
    return OrderedDict({'epoch': epoch,
                        'emd_error': error,
                        'loss': value,
                        'learning_rate': rate,
                        'total_mass': float(p.sum()),
                        'min_entry': float(p.min()),
                        'status': status})


def run_descent(p0, q, metric=None, cfg=DescentConfig()):
    """Run one descent from p0 toward q.

    Each epoch starts the line search at the previous rate times the
    backtracking factor, capped at the ceiling. An epoch where no rate
    lowers the loss takes no step and is recorded as a stall, with the rate
    reset to the floor.

    Arguments:
        p0 (array_like): unit mass source
        q (array_like): unit mass target
        metric: MetricTree, chain costs, or None for a unit chain
        cfg (DescentConfig): parameters

    Returns:
        pandas.DataFrame: one record for the initial state (epoch 0) and
        one per epoch; status is start, accept, ceiling, stall or nonfinite
    """
    cfg = check_config(cfg)
    p, q = check_pair(p0, q)
    p = p.copy()
    loss = LOSSES[cfg.loss]
    distance, gradient = loss_functions(metric, len(p))

    def objective(x):
        return loss_value(distance, loss, x, q)

    rate = cfg.initial_rate
    value = objective(p)
    records = [_record(0, distance(p, q, 1), value, rate, p, 'start')]
    for epoch in range(1, cfg.epochs + 1):
        grad = loss_gradient(gradient, loss, p, q)
        if not np.all(np.isfinite(grad)):
            records.append(_record(epoch, np.nan, np.nan, rate, p,
                                   'nonfinite'))
            break
        found = line_search(objective, p, grad,
                            min(rate * cfg.backtrack_factor,
                                cfg.rate_ceiling), cfg)
        if found is None:
            rate = cfg.rate_floor
            status = 'stall'
        else:
            rate, candidate, candidate_value = found
            assert candidate_value < value
            p, value = candidate, candidate_value
            status = 'ceiling' if rate == cfg.rate_ceiling else 'accept'
        if not np.all(np.isfinite(p)):
            records.append(_record(epoch, np.nan, np.nan, rate, p,
                                   'nonfinite'))
            break
        records.append(_record(epoch, distance(p, q, 1), value, rate, p,
                               status))
    return pd.DataFrame(records, columns=TRACE_COLUMNS)


def _descent_worker(job):
    seed, spec, metric, cfg = job
    p, q = generate_pair(spec._replace(seed=seed))
    return seed, run_descent(p, q, metric, cfg)


def run_batch(spec, cfg=DescentConfig(), runs=None, metric=None, jobs=1):
    """Average descent traces over consecutive seeds.

    Runs use seeds ``cfg.seed .. cfg.seed + runs - 1``; runs that became
    non-finite are left out of the mean and reported.

    Arguments:
        spec (RandomInstanceSpec): size and setting of the random pairs
        cfg (DescentConfig): descent parameters
        runs (int): number of runs, default cfg.runs
        metric: MetricTree, chain costs, or None for a unit chain
        jobs (int): parallel worker processes

    Returns:
        tuple:
            - mean (pandas.DataFrame): epoch, mean_error, mean_rate,
              mean_mass
            - traces (dict): seed -> per run trace
            - excluded (list): seeds of runs left out
    """
    cfg = check_config(cfg)
    runs = cfg.runs if runs is None else runs
    if runs < 1:
        raise BadParamsError(f'runs must be >= 1, got {runs}')
    if isinstance(metric, MetricTree) and metric.n_leaves != spec.n_bins:
        raise BadParamsError(f'tree has {metric.n_leaves} leaves, instance '
                             f'spec asks for {spec.n_bins} bins')
    jobs_list = [(seed, spec, metric, cfg)
                 for seed in range(cfg.seed, cfg.seed + runs)]
    if jobs > 1:
        with multiprocessing.Pool(int(jobs)) as pool:
            results = pool.map(_descent_worker, jobs_list)
    else:
        results = [_descent_worker(job) for job in jobs_list]

    traces = OrderedDict(results)
    excluded = [seed for seed, trace in traces.items()
                if (trace['status'] == 'nonfinite').any()]
    for seed in excluded:
        print(f'[WARNING] run with seed {seed} became non-finite, '
              f'excluded from the mean', file=sys.stderr, flush=True)
    kept = [trace for seed, trace in traces.items() if seed not in excluded]
    if not kept:
        raise NonFiniteError('every descent run became non-finite')
    stacked = pd.concat(kept, ignore_index=True)
    mean = (stacked.groupby('epoch', sort=True)
                   [['emd_error', 'learning_rate', 'total_mass']]
                   .mean()
                   .reset_index())
    mean.columns = MEAN_COLUMNS
    return mean, traces, excluded


def default_spec(setting='easy', n_bins=DEFAULT_BINS, seed=0):
    """Instance spec for the default 64 bin experiment."""
    return RandomInstanceSpec(n_bins=n_bins, setting=setting, seed=seed)
