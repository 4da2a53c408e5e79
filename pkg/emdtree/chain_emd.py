#!/usr/bin/env python3
"""Closed form EMD on chain connected spaces.

Bins ``1..N`` sit on a line and mass moving from bin ``i`` to bin ``j`` has
to pass every bin in between. A chain metric is therefore fully described by
the ``N-1`` consecutive costs ``M_i = M[i, i+1]``, and the transport cost
reduces to a weighted sum over the signed excess of mass crossing each edge
(the cumulative flow).

Gradients are l1 preserving by default: they are taken along the projected
directions ``delta_jk - 1/N`` and sum to zero, so a gradient step never
creates or destroys mass.
"""
import numpy as np
import pandas as pd

from .distributions import as_vector, check_pair
from .exceptions import BadRhoError, BadSizeError, NonPositiveCostError


def unit_metric(n):
    """Chain metric with all consecutive costs equal to 1.

    Arguments:
        n (int): number of bins

    Returns:
        numpy.ndarray: n - 1 ones
    """
    if n < 2:
        raise BadSizeError(f'a chain needs at least 2 bins, got {n}')
    return np.ones(n - 1)


def check_chain_metric(metric, n=None):
    """Validate consecutive costs.

    Arguments:
        metric (array_like or None): N - 1 positive costs, None for unit
        n (int): expected number of bins (optional)

    Returns:
        numpy.ndarray: costs as float64 vector
    """
    if metric is None:
        if n is None:
            raise BadSizeError('unit metric needs the number of bins')
        return unit_metric(n)
    costs = as_vector(metric)
    if len(costs) < 1:
        raise BadSizeError('chain metric needs at least one cost')
    if n is not None and len(costs) != n - 1:
        raise BadSizeError(f'{n} bins need {n - 1} consecutive costs, '
                           f'got {len(costs)}')
    if not np.all(costs > 0):
        raise NonPositiveCostError(f'consecutive cost {int(np.argmin(costs))} '
                                   f'is not positive')
    return costs


def read_chain_metric(path):
    """Read a chain metric file (one positive cost per line)."""
    df = pd.read_csv(path,
                     header=None,
                     names=['cost'],
                     comment='#',
                     skip_blank_lines=True,
                     dtype=np.float64,
                     float_precision='round_trip')
    return check_chain_metric(df['cost'].to_numpy())


def check_rho(rho):
    """Validate the relaxation exponent."""
    if not rho >= 1:
        raise BadRhoError(f'rho must be >= 1, got {rho}')
    return float(rho)


def cumulative_flow(p, q, check_mass=True):
    """Excess mass crossing each chain edge.

    ``phi_i = sum_{j <= i} (p_j - q_j)`` for ``i = 1..N-1``. The last prefix
    sum is the mass difference and is dropped.

    Arguments:
        p (array_like): source distribution
        q (array_like): target distribution
        check_mass (bool): require equal unit mass

    Returns:
        numpy.ndarray: N - 1 signed flows
    """
    p, q = check_pair(p, q, check_mass)
    return np.cumsum(p - q)[:-1]


def edge_weights(phi, costs, rho):
    """Per edge derivative ``rho * M_i * sgn(phi_i) * |phi_i|**(rho - 1)``.

    ``sgn(0)`` is 0, so flat edges contribute nothing for any rho.
    """
    return rho * costs * np.sign(phi) * np.abs(phi) ** (rho - 1)


def chain_emd(p, q, metric=None, rho=1, check_mass=True):
    """Relaxed EMD on a chain, ``sum_i M_i |phi_i|**rho``.

    rho = 1 is the exact EMD, rho = 2 the smooth relaxation.

    Arguments:
        p (array_like): source distribution
        q (array_like): target distribution
        metric (array_like or None): consecutive costs, None for unit costs
        rho (float): relaxation exponent >= 1
        check_mass (bool): require equal unit mass

    Returns:
        float: distance
    """
    rho = check_rho(rho)
    phi = cumulative_flow(p, q, check_mass)
    costs = check_chain_metric(metric, len(phi) + 1)
    return float(np.sum(costs * np.abs(phi) ** rho))


def chain_emd_grad(p, q, metric=None, rho=1, check_mass=True,
                   l1_preserving=True):
    """Gradient of the relaxed chain EMD with respect to p.

    ``grad_k = sum_i w_i * sum_{j <= i} (delta_jk - 1/N)`` with
    ``w = edge_weights(phi, M, rho)``. For rho = 1 this is a subgradient;
    it is not differentiable where some ``phi_i = 0``.

    With ``l1_preserving=False`` the ``1/N`` part is dropped and the plain
    partial derivatives ``sum_{i >= k} w_i`` are returned; steps along them
    change the total mass.

    Arguments:
        p (array_like): source distribution
        q (array_like): target distribution
        metric (array_like or None): consecutive costs, None for unit costs
        rho (float): relaxation exponent >= 1
        check_mass (bool): require equal unit mass
        l1_preserving (bool): project onto zero sum directions

    Returns:
        numpy.ndarray: N gradient entries, summing to zero when projected
    """
    rho = check_rho(rho)
    phi = cumulative_flow(p, q, check_mass)
    n = len(phi) + 1
    costs = check_chain_metric(metric, n)
    weights = edge_weights(phi, costs, rho)
    # sum_{i >= k} w_i, zero for the last bin
    tail = np.append(np.cumsum(weights[::-1])[::-1], 0.0)
    if not l1_preserving:
        return tail
    # mean(tail) == dot(w, 1..N-1) / N; the second pass removes the
    # rounding residue of the first
    grad = tail - tail.mean()
    return grad - grad.mean()


def chain_emd2_hessian(metric, n):
    """Hessian of the rho = 2 chain EMD.

    ``H_kl = 2 sum_i M_i (N H(i-l) - i)(N H(i-k) - i)`` with the Heaviside
    step ``H(x) = 1 for x >= 0``. The matrix does not depend on p or q.
    Second differences of the projected gradient along projected directions
    equal ``H / N**2``.

    Arguments:
        metric (array_like or None): n - 1 consecutive costs
        n (int): number of bins

    Returns:
        numpy.ndarray: symmetric n x n matrix with zero row sums
    """
    if n < 2:
        raise BadSizeError(f'hessian needs at least 2 bins, got {n}')
    costs = check_chain_metric(metric, n)
    edges = np.arange(1, n)[:, None]
    bins = np.arange(1, n + 1)[None, :]
    steps = n * (edges >= bins) - edges
    hessian = 2 * (steps.T * costs) @ steps
    return (hessian + hessian.T) / 2


def to_cost_matrix(metric):
    """Dense ground cost matrix induced by a chain metric.

    Arguments:
        metric (array_like): consecutive costs

    Returns:
        numpy.ndarray: symmetric N x N matrix with zero diagonal
    """
    costs = check_chain_metric(metric)
    offsets = np.concatenate([[0.0], np.cumsum(costs)])
    return np.abs(offsets[:, None] - offsets[None, :])
