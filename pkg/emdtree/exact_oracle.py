#!/usr/bin/env python3
"""Exact EMD by min-cost flow.

The transport problem between p and q is solved as a min-cost flow on the
complete bipartite network (rows -> columns, unbounded capacity, cost
M[i, j]) with successive shortest paths: Dijkstra on reduced costs, augment
along the cheapest path, update node potentials. Masses that sit on a
dyadic grid are scaled to integers first so every augmentation is exact;
other inputs are handled in float64.

The result is certified: after the last augmentation every residual arc has
a non-negative reduced cost. This is an oracle for small problems, not a
production solver.
"""
import numpy as np
import pandas as pd

from .distributions import check_pair
from .exceptions import (NegativeEntryError, OracleCertificateError,
                         ShapeMismatchError, TooLargeError)

DEFAULT_MAX_SIZE = 256
FLOW_EPS = 1e-14
REDUCED_COST_TOLERANCE = 1e-12
MAX_GRID_BITS = 52


def check_cost_matrix(m, n=None):
    """Validate a ground cost matrix.

    Arguments:
        m (array_like): N x N costs
        n (int): expected size (optional)

    Returns:
        numpy.ndarray: costs as float64 matrix
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatchError(f'cost matrix must be square, '
                                 f'got shape {m.shape}')
    if n is not None and m.shape[0] != n:
        raise ShapeMismatchError(f'cost matrix is {m.shape[0]} x '
                                 f'{m.shape[1]}, distributions have {n} bins')
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise NegativeEntryError('cost matrix entries must be finite and '
                                 'non-negative')
    tol = REDUCED_COST_TOLERANCE * max(1.0, float(m.max(initial=0)))
    if np.any(np.abs(np.diag(m)) > tol):
        raise ShapeMismatchError('cost matrix must have a zero diagonal')
    if np.any(np.abs(m - m.T) > tol):
        raise ShapeMismatchError('cost matrix must be symmetric')
    return m


def read_cost_matrix(path):
    """Read a CSV cost matrix (N rows of N values, no header)."""
    df = pd.read_csv(path, header=None, comment='#', dtype=np.float64,
                     float_precision='round_trip')
    return check_cost_matrix(df.to_numpy())


def write_plan(plan, path_or_buf):
    """Write a transport plan as CSV."""
    pd.DataFrame(plan).to_csv(path_or_buf, header=False, index=False,
                              float_format='%.17g')


def plan_cost(t, m):
    """Frobenius product <M, T>.

    Arguments:
        t (array_like): transport plan
        m (array_like): cost matrix

    Returns:
        float: total transport cost
    """
    t = np.asarray(t, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if t.shape != m.shape:
        raise ShapeMismatchError(f'plan shape {t.shape} does not match '
                                 f'cost shape {m.shape}')
    return float(np.sum(m * t))


def _shortest_paths(m, flow, potential, supply):
    """Dijkstra over the residual network using reduced costs.

    Nodes 0..n-1 are rows, n..2n-1 columns. All rows with supply left start
    at distance 0.

    Returns:
        tuple: (distances, predecessors)
    """
    n = len(supply)
    dist = np.full(2 * n, np.inf)
    pred = np.full(2 * n, -1)
    done = np.zeros(2 * n, dtype=bool)
    dist[:n][supply > FLOW_EPS] = 0.0
    while True:
        u = int(np.argmin(np.where(done, np.inf, dist)))
        if done[u] or not np.isfinite(dist[u]):
            break
        done[u] = True
        if u < n:
            reduced = np.maximum(m[u] + potential[u] - potential[n:], 0)
            reach = dist[u] + reduced
            better = ~done[n:] & (reach < dist[n:])
            heads = np.nonzero(better)[0]
            dist[heads + n] = reach[heads]
            pred[heads + n] = u
        else:
            # backward arcs exist only where flow was sent
            j = u - n
            reduced = np.maximum(potential[u] - m[:, j] - potential[:n], 0)
            reach = dist[u] + reduced
            better = (flow[:, j] > FLOW_EPS) & ~done[:n] & (reach < dist[:n])
            heads = np.nonzero(better)[0]
            dist[heads] = reach[heads]
            pred[heads] = u
    return dist, pred


def _certify(m, flow, potential):
    """Check dual feasibility and complementary slackness."""
    n = len(m)
    tol = REDUCED_COST_TOLERANCE * max(1.0, float(m.max(initial=0)))
    reduced = m + potential[:n, None] - potential[None, n:]
    if reduced.min() < -tol:
        raise OracleCertificateError(f'negative reduced cost '
                                     f'{reduced.min()!r} in residual network')
    used = flow > FLOW_EPS
    if np.any(np.abs(reduced[used]) > tol):
        raise OracleCertificateError('flow on an arc with positive '
                                     'reduced cost')


def integer_grid_scale(*masses):
    """Smallest power of two that turns every mass into an integer.

    Returns None if more than ``MAX_GRID_BITS`` bits would be needed, in
    which case the oracle stays on floating point masses.
    """
    values = np.concatenate([np.ravel(x) for x in masses])
    for bits in range(MAX_GRID_BITS + 1):
        scaled = values * 2.0 ** bits
        if np.all(scaled == np.floor(scaled)):
            return 2.0 ** bits
    return None


def exact_emd(p, q, m, max_size=DEFAULT_MAX_SIZE):
    """Exact EMD between two unit mass distributions.

    Arguments:
        p (array_like): source distribution
        q (array_like): target distribution
        m (array_like): ground cost matrix
        max_size (int): refuse problems with more bins than this

    Returns:
        tuple: (distance, transport plan)
    """
    p, q = check_pair(p, q)
    n = len(p)
    if n > max_size:
        raise TooLargeError(f'{n} bins exceed the oracle cap of {max_size}')
    if np.any(p < 0) or np.any(q < 0):
        raise NegativeEntryError('distributions must be non-negative')
    m = check_cost_matrix(m, n)

    scale = integer_grid_scale(p, q)
    if scale is None:
        scale, eps = 1.0, FLOW_EPS
    else:
        # integer masses below 2**53 subtract exactly
        eps = 0.5
    supply = p * scale
    demand = q * scale
    flow = np.zeros((n, n))
    potential = np.zeros(2 * n)
    for _ in range(4 * n * n + 8):
        if not (np.any(supply > eps) and np.any(demand > eps)):
            break
        dist, pred = _shortest_paths(m, flow, potential, supply)
        sinks = np.nonzero(demand > eps)[0]
        target = n + int(sinks[np.argmin(dist[n + sinks])])
        if not np.isfinite(dist[target]):
            raise OracleCertificateError('no augmenting path left')
        potential += np.minimum(dist, dist[target])

        path = [target]
        while pred[path[-1]] >= 0:
            path.append(int(pred[path[-1]]))
        path.reverse()
        source = path[0]
        delta = min(supply[source], demand[target - n])
        arcs = list(zip(path[:-1], path[1:]))
        for tail, head in arcs:
            if tail >= n:
                delta = min(delta, flow[head, tail - n])
        for tail, head in arcs:
            if tail < n:
                flow[tail, head - n] += delta
            else:
                flow[head, tail - n] -= delta
        supply[source] -= delta
        demand[target - n] -= delta
    else:
        raise OracleCertificateError('successive shortest paths did not '
                                     'terminate')
    flow /= scale
    np.maximum(flow, 0, out=flow)
    _certify(m, flow, potential)
    return plan_cost(flow, m), flow
