"""
Proximal operators of the SLOPE norm and of its directional derivative
"""

from __future__ import division

from .errors import logger
from .core import as_lambda, as_vector, check_lengths, clusters, pattern, block_ranges

# NumPy
try:
    import numpy as np
except:
    logger.error('NumPy must be installed')
    raise ImportError


class ProxRequest(object):

    """
    A prox evaluation: prox of step * penalty at y

    Args:
        lam (LambdaVector or array-like)
        y (array-like): The input vector.
        anchor (Optional[array-like]): beta0. If given, the penalty is
            u -> J'_lambda(beta0; u), otherwise J_lambda.
        step (Optional[float]): The prox step t > 0.
    """

    def __init__(self, lam, y, anchor=None, step=1.0):

        self.lam = as_lambda(lam)
        self.y = as_vector(y, 'input')
        self.anchor = None if anchor is None else as_vector(anchor, 'anchor')
        self.step = float(step)

        if self.step <= 0:

            logger.error('  The prox step must be positive.')
            raise ValueError('step must be positive')

        if self.anchor is None:
            check_lengths(lam=self.lam.values, input=self.y)
        else:
            check_lengths(lam=self.lam.values, input=self.y, anchor=self.anchor)

    def evaluate(self):

        lam = self.lam.scaled(self.step)

        if self.anchor is None:
            return prox_slope(lam, self.y)
        else:
            return prox_directional(lam, self.anchor, self.y)


def isotonic_projection(z):

    """
    Euclidean projection onto the nonincreasing cone by pool-adjacent-violators

    Args:
        z (array-like)

    Returns:
        1d array, nonincreasing, with pooled blocks set to their means
    """

    z = as_vector(z)

    sums = list()
    counts = list()

    for value in z:

        sums.append(value)
        counts.append(1)

        # Merge backwards while the previous block mean is below the current one.
        while len(sums) > 1 and sums[-2] * counts[-1] < sums[-1] * counts[-2]:

            s = sums.pop()
            c = counts.pop()

            sums[-1] += s
            counts[-1] += c

    out = np.empty(z.size, dtype='float64')
    start = 0

    for s, c in zip(sums, counts):

        out[start:start+c] = s / c
        start += c

    return out


def _sorted_prox(values, lam_block, nonnegative):

    """
    Prox on one block: sort descending, subtract lambda, project, unsort
    """

    order = np.argsort(-values, kind='stable')

    x = isotonic_projection(values[order] - lam_block)

    if nonnegative:
        x = np.maximum(x, 0.0)

    out = np.empty(values.size, dtype='float64')
    out[order] = x

    return out


def prox_slope(lam, y):

    """
    The SLOPE proximal operator argmin_u 0.5 * ||u - y||^2 + J_lambda(u)

    Args:
        lam (LambdaVector or array-like)
        y (array-like)

    Returns:
        1d array
    """

    lam = as_lambda(lam)
    y = as_vector(y, 'y')

    check_lengths(lam=lam.values, y=y)

    magnitudes = _sorted_prox(np.abs(y), lam.values, True)

    return np.where(y < 0, -magnitudes, magnitudes)


def prox_directional(lam, beta0, y):

    """
    The prox of u -> J'_lambda(beta0; u)

    The penalty separates over the clusters of beta0. The zero cluster gets a
    SLOPE prox with its lambda block; each nonzero cluster gets an isotonic
    projection of the sign-corrected, sorted input minus its lambda block.

    Args:
        lam (LambdaVector or array-like)
        beta0 (array-like)
        y (array-like)

    Returns:
        1d array
    """

    lam = as_lambda(lam)
    beta0 = as_vector(beta0, 'beta0')
    y = as_vector(y, 'y')

    check_lengths(lam=lam.values, beta0=beta0, y=y)

    partition = clusters(pattern(beta0))
    ranges = block_ranges(partition)

    out = np.zeros(y.size, dtype='float64')

    if partition.zero_cluster:

        idx = np.array(partition.zero_cluster)
        start, stop = ranges[0]

        out[idx] = prox_slope(lam.values[start:stop], y[idx])

    for j, cluster in enumerate(partition.nonzero_clusters, start=1):

        idx = np.array(cluster)
        signs = np.array([partition.signs[i] for i in cluster], dtype='float64')
        start, stop = ranges[j]

        out[idx] = signs * _sorted_prox(signs * y[idx], lam.values[start:stop], False)

    return out
