#!/usr/bin/env python3
"""Mass vectors over bins or leaves.

A distribution is a one dimensional ``numpy.ndarray`` of ``float64`` with at
least two non-negative entries. Kernels in this package expect unit mass
inputs and check them with :func:`check_pair`; normalisation only happens at
the command line boundary.

Random instances are drawn from ``numpy.random.Generator(PCG64(seed))``.
Stream layout: ``n_bins`` doubles for ``p`` followed by ``n_bins`` doubles
for ``q`` (``Generator.random``), then the Hard setting masks and both
vectors are normalised.
"""
from typing import NamedTuple

import numpy as np
import pandas as pd

from .exceptions import (BadSizeError, LengthMismatchError,
                         MassMismatchError, NegativeEntryError, OddBinsError,
                         ZeroMassError, BadParamsError)

MASS_TOLERANCE = 1e-9
UNIT_TOLERANCE = 1e-12
SETTINGS = ('easy', 'hard')


class RandomInstanceSpec(NamedTuple):
    """Recipe for a random source/target pair."""
    n_bins: int
    setting: str = 'easy'
    seed: int = 0


def make_rng(seed):
    """Create the package's seeded random generator.

    Arguments:
        seed (int): unsigned 64 bit seed

    Returns:
        numpy.random.Generator: PCG64 backed generator
    """
    return np.random.Generator(np.random.PCG64(seed))


def as_vector(values):
    """Convert values to a one dimensional float64 array."""
    vector = np.asarray(values, dtype=np.float64)
    if vector.ndim != 1:
        raise BadSizeError(f'expected a vector, got shape {vector.shape}')
    return vector


def check_distribution(d):
    """Validate a distribution.

    Arguments:
        d (array_like): mass per bin

    Returns:
        numpy.ndarray: the distribution as float64 vector
    """
    d = as_vector(d)
    if len(d) < 2:
        raise BadSizeError(f'distribution needs at least 2 bins, got {len(d)}')
    if np.any(d < 0):
        raise NegativeEntryError(f'negative entry at bin {int(np.argmin(d))}')
    return d


def normalize_l1(d):
    """l1-normalise a distribution.

    Inputs whose mass is already 1 (within 1e-12) are returned unchanged,
    which makes the operation idempotent.

    Arguments:
        d (array_like): non-negative mass per bin

    Returns:
        numpy.ndarray: unit mass copy of d
    """
    d = check_distribution(d)
    total = d.sum()
    if total == 0:
        raise ZeroMassError('distribution has zero mass')
    if abs(total - 1) <= UNIT_TOLERANCE:
        return d.copy()
    return d / total


def check_pair(p, q, check_mass=True):
    """Validate a source/target pair for the distance kernels.

    Arguments:
        p (array_like): source distribution
        q (array_like): target distribution
        check_mass (bool): require equal unit mass (within 1e-9)

    Returns:
        tuple: (p, q) as float64 vectors
    """
    p = as_vector(p)
    q = as_vector(q)
    if len(p) != len(q):
        raise LengthMismatchError(f'p has {len(p)} bins, q has {len(q)}')
    if len(p) < 2:
        raise BadSizeError(f'distribution needs at least 2 bins, got {len(p)}')
    if check_mass:
        p_mass, q_mass = p.sum(), q.sum()
        if abs(p_mass - q_mass) > MASS_TOLERANCE:
            raise MassMismatchError(f'mass of p ({p_mass!r}) differs from '
                                    f'mass of q ({q_mass!r})')
        if abs(p_mass - 1) > MASS_TOLERANCE:
            raise MassMismatchError(f'inputs must have unit mass, '
                                    f'got {p_mass!r}')
    return p, q


def generate_pair(spec):
    """Draw a deterministic random source/target pair.

    Easy: every bin drawn uniformly from [0, 1). Hard: the right half of p
    and the left half of q are zeroed, so all mass has to cross the middle.

    Arguments:
        spec (RandomInstanceSpec): size, setting and seed

    Returns:
        tuple: (p, q) unit mass vectors
    """
    if spec.setting not in SETTINGS:
        raise BadParamsError(f'unknown setting {spec.setting!r}, '
                             f'expected one of {", ".join(SETTINGS)}')
    if spec.n_bins < 2:
        raise BadSizeError(f'need at least 2 bins, got {spec.n_bins}')
    if spec.setting == 'hard' and spec.n_bins % 2:
        raise OddBinsError(f'hard setting needs an even number of bins, '
                           f'got {spec.n_bins}')
    rng = make_rng(spec.seed)
    p = rng.random(spec.n_bins)
    q = rng.random(spec.n_bins)
    if spec.setting == 'hard':
        half = spec.n_bins // 2
        p[half:] = 0
        q[:half] = 0
    return normalize_l1(p), normalize_l1(q)


def read_distribution(path):
    """Read a distribution file.

    One value per line, blank lines and ``#`` comments are ignored.

    Arguments:
        path (str): path of the file

    Returns:
        numpy.ndarray: values in file order
    """
    df = pd.read_csv(path,
                     header=None,
                     names=['value'],
                     comment='#',
                     skip_blank_lines=True,
                     dtype=np.float64,
                     float_precision='round_trip')
    return check_distribution(df['value'].to_numpy())


def write_distribution(d, path_or_buf):
    """Write a distribution in the distribution file format."""
    pd.DataFrame({'value': as_vector(d)}).to_csv(path_or_buf,
                                                  header=False,
                                                  index=False,
                                                  float_format='%.17g')
