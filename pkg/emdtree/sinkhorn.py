#!/usr/bin/env python3
"""Sinkhorn-Knopp distance and subgradient.

Plain (not log-domain) scaling iterations::

    K = exp(-lambda * M - 1), u = 1
    repeat: u = p / (K (q / (K^T u)))
    v = q / (K^T u)
    SD = sum(u * ((K * M) v)),  grad = log(u) / lambda

Every operation inside the loop, including building K, runs in the
configured precision (``float32`` or ``float64``) so accumulation and
underflow behave as they would on that hardware. Non-finite scalings stop
the iteration and flag the result as numerically degenerate instead of
raising: degeneracy is a result here, not an error.
"""
from typing import NamedTuple

import numpy as np

from .distributions import check_distribution, check_pair
from .exact_oracle import check_cost_matrix
from .exceptions import BadEpsError, BadParamsError, ZeroEntryError

PRECISIONS = {'f32': np.float32, 'f64': np.float64}
DEFAULT_TOL = 1e-9


class SinkhornConfig(NamedTuple):
    """Sinkhorn parameters.

    ``lam`` is the regularisation factor lambda; larger values approach the
    EMD but widen the dynamic range of K.
    """
    lam: float
    max_iter: int = 100
    tol: float = DEFAULT_TOL
    precision: str = 'f64'


class SinkhornResult(NamedTuple):
    distance: float
    subgradient: np.ndarray
    plan: np.ndarray
    iterations: int
    converged: bool
    marginal_error: float
    numerically_degenerate: bool = False


def check_config(cfg):
    """Validate a SinkhornConfig."""
    if not cfg.lam > 0:
        raise BadParamsError(f'lambda must be positive, got {cfg.lam}')
    if cfg.max_iter < 1:
        raise BadParamsError(f'max_iter must be >= 1, got {cfg.max_iter}')
    if not cfg.tol > 0:
        raise BadParamsError(f'tol must be positive, got {cfg.tol}')
    if cfg.precision not in PRECISIONS:
        raise BadParamsError(f'unknown precision {cfg.precision!r}, '
                             f'expected one of {", ".join(PRECISIONS)}')
    return cfg


def epsilon_smooth(d, eps):
    """Add eps to every bin and renormalise.

    Makes distributions with empty bins acceptable to :func:`sinkhorn`.

    Arguments:
        d (array_like): distribution
        eps (float): mass added per bin, > 0

    Returns:
        numpy.ndarray: strictly positive unit mass distribution
    """
    if not eps > 0:
        raise BadEpsError(f'eps must be positive, got {eps}')
    d = check_distribution(d) + eps
    return d / d.sum()


def _all_finite(*arrays):
    return all(np.all(np.isfinite(a)) for a in arrays)


def sinkhorn(p, q, m, cfg):
    """Sinkhorn distance, subgradient and plan.

    Converged means the relative sup-norm change of u dropped below
    ``cfg.tol`` before ``cfg.max_iter`` iterations.

    Arguments:
        p (array_like): strictly positive source distribution
        q (array_like): strictly positive target distribution
        m (array_like): ground cost matrix
        cfg (SinkhornConfig): parameters

    Returns:
        SinkhornResult: distance is <M, T> of the regularised plan, not the
        entropic objective; NaN when degenerate
    """
    cfg = check_config(cfg)
    p, q = check_pair(p, q)
    if np.any(p <= 0) or np.any(q <= 0):
        raise ZeroEntryError('sinkhorn needs strictly positive p and q, '
                             'smooth them with epsilon_smooth first')
    m = check_cost_matrix(m, len(p))

    dtype = PRECISIONS[cfg.precision]
    lam = dtype(cfg.lam)
    one = dtype(1)
    p_, q_, m_ = p.astype(dtype), q.astype(dtype), m.astype(dtype)

    converged = False
    degenerate = False
    iterations = 0
    with np.errstate(all='ignore'):
        kernel = np.exp(-lam * m_ - one)
        u = np.ones(len(p), dtype=dtype)
        for iterations in range(1, cfg.max_iter + 1):
            col = kernel.T @ u
            row = kernel @ (q_ / col)
            updated = p_ / row
            if not _all_finite(col, row, updated) or np.any(updated == 0):
                degenerate = True
                break
            change = np.max(np.abs(updated - u)) / np.max(np.abs(updated))
            u = updated
            if change < cfg.tol:
                converged = True
                break

        v = q_ / (kernel.T @ u)
        distance = np.sum(u * ((kernel * m_) @ v))
        subgradient = np.log(u) / lam
        plan = u[:, None] * kernel * v[None, :]

    if not _all_finite(v, distance, subgradient, plan):
        degenerate = True
    if degenerate:
        converged = False
        distance = np.nan
    # products of positive factors, never negative
    plan = plan.astype(np.float64)
    marginal_error = float(max(np.max(np.abs(plan.sum(axis=1) - p)),
                               np.max(np.abs(plan.sum(axis=0) - q))))
    return SinkhornResult(distance=float(distance),
                          subgradient=subgradient.astype(np.float64),
                          plan=plan,
                          iterations=iterations,
                          converged=converged,
                          marginal_error=marginal_error,
                          numerically_degenerate=degenerate)
