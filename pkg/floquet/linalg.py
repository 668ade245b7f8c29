"""Helpers shared by the tensor-network engines."""
from collections import namedtuple

import numpy as np
import scipy.linalg as spla

from floquet.errors import SingularGauge

# Singular values and gauge entries below this fraction of the largest one
# are numerical zeros.
SVD_CUTOFF = 1e-12

Truncation = namedtuple('Truncation', ['u', 's', 'vh', 'discarded'])


def svd(matrix):
    """Thin SVD, falling back to the slower but sturdier LAPACK driver."""
    try:
        return spla.svd(matrix, full_matrices=False, lapack_driver='gesdd')
    except np.linalg.LinAlgError:
        return spla.svd(matrix, full_matrices=False, lapack_driver='gesvd')


def truncated_svd(matrix, chi_max=None, cutoff=SVD_CUTOFF):
    """
    Split a matrix keeping at most chi_max singular values.

    Singular values come out of LAPACK sorted descending; on ties at the cut
    the first ones by index are kept. Values below cutoff times the largest
    are dropped as zeros and do not count as truncation. The kept vector is
    renormalised to unit 2-norm and the discarded weight (squared singular
    values over their total) is returned alongside.
    """
    u, s, vh = svd(matrix)
    if s.size == 0 or s[0] <= 0.0:
        raise SingularGauge('cannot split a zero tensor')
    total = np.sum(s ** 2)
    nonzero = int(np.count_nonzero(s > cutoff * s[0]))
    keep = nonzero if chi_max is None else min(nonzero, chi_max)
    discarded = float(np.sum(s[keep:nonzero] ** 2) / total)
    kept = s[:keep] / np.linalg.norm(s[:keep])
    return Truncation(u[:, :keep], kept, vh[:keep, :], discarded)


def pseudo_inverse(weights, cutoff=SVD_CUTOFF):
    """Invert a gauge vector, zeroing entries below cutoff times its maximum."""
    weights = np.asarray(weights, dtype=float)
    largest = np.max(weights) if weights.size else 0.0
    if largest <= 0.0:
        raise SingularGauge('gauge vector has no positive entry')
    inverse = np.zeros_like(weights)
    alive = weights > cutoff * largest
    inverse[alive] = 1.0 / weights[alive]
    return inverse


def scale_axis(tensor, axis, weights):
    """Multiply a tensor by a diagonal matrix along one axis."""
    shape = [1] * tensor.ndim
    shape[axis] = -1
    return tensor * np.reshape(weights, shape)
