#!/usr/bin/env python3
"""Errors raised by the emdtree kernels.

Every error derives from :class:`EmdError` (a :class:`ValueError`), so
callers that only care about bad input can catch a single class. The CLI
turns them into ``[ERROR]`` messages.
"""


class EmdError(ValueError):
    """Base class for all emdtree input and numerical errors."""


class ZeroMassError(EmdError):
    """Distribution has no mass and cannot be normalised."""


class NegativeEntryError(EmdError):
    """Distribution has an entry below zero."""


class OddBinsError(EmdError):
    """Hard instances need an even number of bins."""


class LengthMismatchError(EmdError):
    """Two vectors that must share a length do not."""


class MassMismatchError(EmdError):
    """Distributions do not carry the same (unit) mass."""


class BadRhoError(EmdError):
    """Relaxation exponent below 1."""


class BadSizeError(EmdError):
    """Problem size is inconsistent with the metric."""


class TreeFormatError(EmdError):
    """Tree text could not be parsed."""


class CycleError(EmdError):
    """Parent map contains a cycle."""


class MultipleRootsError(EmdError):
    """More than one node without a parent."""


class DisconnectedNodeError(EmdError):
    """A node refers to a parent that is not part of the tree."""


class NonPositiveCostError(EmdError):
    """Edge cost is not strictly positive."""


class DuplicateIdError(EmdError):
    """Node id declared more than once."""


class TooFewLeavesError(EmdError):
    """Tree has fewer than two leaves."""


class UnknownNodeError(EmdError):
    """Node id not present in the tree."""


class LeafRootChangeError(EmdError):
    """Re-rooting would change the set of leaves."""


class TooLargeError(EmdError):
    """Problem exceeds the exact oracle's size cap."""


class ShapeMismatchError(EmdError):
    """Matrix shape does not match the distributions."""


class ZeroEntryError(EmdError):
    """Sinkhorn input has an entry that is not strictly positive."""


class BadEpsError(EmdError):
    """Smoothing epsilon is not strictly positive."""


class NonFiniteError(EmdError):
    """Iterate became non-finite."""


class ZeroVectorError(EmdError):
    """Vector vanishes after projection to the zero-sum subspace."""


class BadParamsError(EmdError):
    """Invalid generator or configuration parameters."""


class OracleCertificateError(EmdError):
    """Min-cost-flow result failed its optimality check."""
