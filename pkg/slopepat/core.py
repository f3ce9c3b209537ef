"""
SLOPE norm, patterns, limiting patterns and penalty sequences
"""

from __future__ import division

import itertools

from .errors import logger, DimensionError, InvalidLambdaError, InvalidPatternError, NotPositiveDefiniteError

try:
    import numpy as np
except ImportError:
    raise ImportError('NumPy must be installed')

try:
    from scipy.stats import norm
except ImportError:
    raise ImportError('SciPy must be installed')


# Two magnitudes share a cluster iff |a - b| <= TAU_CLUSTER * max(1, |a|, |b|).
TAU_CLUSTER = 1e-9


def as_vector(values, name='vector'):

    """
    Converts input to a 1d float64 array

    Args:
        values (array-like)
        name (Optional[str]): The name used in error messages.
    """

    values = np.asarray(values, dtype='float64')

    if values.ndim == 0:
        values = values.reshape(1)

    if values.ndim != 1:

        logger.error('  The {} must be one-dimensional.'.format(name))
        raise DimensionError('{} must be one-dimensional, got shape {}'.format(name, values.shape))

    return values


def check_lengths(**vectors):

    """
    Checks that all named vectors have the same length
    """

    lengths = dict((k, len(v)) for k, v in vectors.items())

    if len(set(lengths.values())) > 1:

        msg = 'dimension mismatch: {}'.format(', '.join('{}={:d}'.format(k, lengths[k]) for k in sorted(lengths)))

        logger.error('  ' + msg)
        raise DimensionError(msg)


def _same_level(a, b):
    return abs(a - b) <= TAU_CLUSTER * max(1.0, abs(a), abs(b))


class LambdaVector(object):

    """
    A nonincreasing, nonnegative SLOPE penalty sequence

    Args:
        values (array-like): The penalties, largest first.
    """

    def __init__(self, values):

        values = np.array(values, dtype='float64').ravel()

        if values.size < 1:

            logger.error('  The penalty sequence is empty.')
            raise InvalidLambdaError('lambda must have at least one entry')

        if not np.all(np.isfinite(values)):
            raise InvalidLambdaError('lambda must be finite')

        if values.min() < 0:

            logger.error('  The penalty sequence has negative entries.')
            raise InvalidLambdaError('lambda must be nonnegative')

        if np.any(np.diff(values) > 0):

            logger.error('  The penalty sequence is not nonincreasing.')
            raise InvalidLambdaError('lambda must be nonincreasing')

        values.flags.writeable = False

        self.values = values

    @property
    def p(self):
        return self.values.size

    def scaled(self, factor):

        """Returns factor * lambda"""

        if factor < 0:
            raise InvalidLambdaError('lambda scale factor must be nonnegative')

        return LambdaVector(self.values * factor)

    def is_constant(self):
        return bool(np.all(self.values == self.values[0]))

    def __len__(self):
        return self.values.size

    def __getitem__(self, item):
        return self.values[item]

    def __iter__(self):
        return iter(self.values)

    def __array__(self, dtype=None, copy=None):

        if dtype is None:
            return self.values.copy()

        return self.values.astype(dtype)

    def __eq__(self, other):

        if not isinstance(other, LambdaVector):
            return NotImplemented

        return self.values.shape == other.values.shape and bool(np.all(self.values == other.values))

    def __ne__(self, other):

        result = self.__eq__(other)

        if result is NotImplemented:
            return result

        return not result

    def __hash__(self):
        return hash(tuple(self.values))

    def __repr__(self):
        return 'LambdaVector({})'.format(list(self.values))


def as_lambda(lam):

    if isinstance(lam, LambdaVector):
        return lam

    return LambdaVector(lam)


class SlopePattern(object):

    """
    An integer rank-sign vector

    Args:
        entries (array-like of int)
    """

    def __init__(self, entries):

        entries = np.array(entries, dtype='int64').ravel()

        magnitudes = np.abs(entries)
        m = int(magnitudes.max()) if entries.size else 0

        present = set(magnitudes.tolist())

        for k in range(1, m + 1):

            if k not in present:

                logger.error('  The pattern {} skips rank {:d}.'.format(entries.tolist(), k))
                raise InvalidPatternError('pattern ranks must be consecutive, rank {:d} is missing'.format(k))

        entries.flags.writeable = False

        self.entries = entries

    @property
    def p(self):
        return self.entries.size

    @property
    def n_clusters(self):

        """The number of nonzero clusters"""

        return int(np.abs(self.entries).max()) if self.entries.size else 0

    def support(self):
        return np.flatnonzero(self.entries)

    def __len__(self):
        return self.entries.size

    def __getitem__(self, item):
        return self.entries[item]

    def __iter__(self):
        return iter(self.entries)

    def __array__(self, dtype=None, copy=None):

        if dtype is None:
            return self.entries.copy()

        return self.entries.astype(dtype)

    def as_tuple(self):
        return tuple(int(e) for e in self.entries)

    def __eq__(self, other):

        if isinstance(other, SlopePattern):
            return self.as_tuple() == other.as_tuple()

        if isinstance(other, (tuple, list)):
            return self.as_tuple() == tuple(other)

        return NotImplemented

    def __ne__(self, other):

        result = self.__eq__(other)

        if result is NotImplemented:
            return result

        return not result

    def __lt__(self, other):
        return self.as_tuple() < other.as_tuple()

    def __hash__(self):
        return hash(self.as_tuple())

    def __str__(self):
        return ','.join(str(e) for e in self.as_tuple())

    def __repr__(self):
        return 'SlopePattern({})'.format(list(self.as_tuple()))

    @classmethod
    def from_string(cls, text):
        return cls([int(t) for t in text.split(',') if t.strip()])


def as_pattern(value):

    if isinstance(value, SlopePattern):
        return value

    return SlopePattern(value)


class ClusterPartition(object):

    """
    The ordered signed clusters of a pattern

    Args:
        p (int): The dimension.
        zero_cluster (tuple): I_0, possibly empty.
        nonzero_clusters (list of tuples): I_1, .., I_m, lowest magnitude rank first.
        signs (dict): Index -> -1 or +1 on the nonzero clusters.
    """

    def __init__(self, p, zero_cluster, nonzero_clusters, signs):

        self.p = p
        self.zero_cluster = tuple(zero_cluster)
        self.nonzero_clusters = [tuple(c) for c in nonzero_clusters]
        self.signs = dict(signs)

        covered = sorted(list(self.zero_cluster) + [i for c in self.nonzero_clusters for i in c])

        if covered != list(range(p)):
            raise InvalidPatternError('clusters do not partition 0..{:d}'.format(p - 1))

        if any(len(c) == 0 for c in self.nonzero_clusters):
            raise InvalidPatternError('nonzero clusters must be nonempty')

    @property
    def m(self):
        return len(self.nonzero_clusters)

    def blocks(self):

        """
        Returns all clusters as sets, the zero cluster first when it is nonempty
        """

        sets = [frozenset(c) for c in self.nonzero_clusters]

        if self.zero_cluster:
            sets.insert(0, frozenset(self.zero_cluster))

        return sets

    def positive(self, j):

        """I_j^+ for 1 <= j <= m"""

        return tuple(i for i in self.nonzero_clusters[j-1] if self.signs[i] > 0)

    def negative(self, j):

        """I_j^- for 1 <= j <= m"""

        return tuple(i for i in self.nonzero_clusters[j-1] if self.signs[i] < 0)

    def sign_vector(self):

        """The diagonal of S_p: +1 on I_0, the pattern signs elsewhere"""

        s = np.ones(self.p, dtype='float64')

        for i, sign in self.signs.items():
            s[i] = sign

        return s

    def __repr__(self):
        return 'ClusterPartition(I0={}, clusters={})'.format(self.zero_cluster, self.nonzero_clusters)


class CovarianceMatrix(object):

    """
    A symmetric positive definite p x p matrix

    Args:
        entries (2d array-like)
    """

    def __init__(self, entries):

        entries = np.array(entries, dtype='float64')

        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:

            logger.error('  The covariance matrix must be square.')
            raise DimensionError('covariance must be square, got shape {}'.format(entries.shape))

        scale = max(1.0, float(np.abs(entries).max()))

        if not np.allclose(entries, entries.T, rtol=0, atol=1e-12 * scale):

            logger.error('  The covariance matrix is not symmetric.')
            raise NotPositiveDefiniteError('covariance must be symmetric')

        entries = 0.5 * (entries + entries.T)

        eigenvalues = np.linalg.eigvalsh(entries)

        if eigenvalues[0] <= 1e-12 * scale:

            logger.error('  The covariance matrix is not positive definite (min eigenvalue {:g}).'.format(eigenvalues[0]))
            raise NotPositiveDefiniteError('covariance must be positive definite')

        entries.flags.writeable = False

        self.entries = entries

    @property
    def p(self):
        return self.entries.shape[0]

    @classmethod
    def identity(cls, p):
        return cls(np.eye(p))

    @classmethod
    def block_diagonal(cls, p, support, sigma):

        """
        Builds I on the complement of `support` and `sigma` on `support`

        Args:
            p (int)
            support (list of int)
            sigma (2d array-like): A positive definite |support| x |support| block.
        """

        support = list(support)
        sigma = np.asarray(sigma, dtype='float64')

        if sigma.shape != (len(support), len(support)):
            raise DimensionError('the support block must be {:d} x {:d}'.format(len(support), len(support)))

        entries = np.eye(p)
        entries[np.ix_(support, support)] = sigma

        return cls(entries)

    def scaled(self, factor):
        return CovarianceMatrix(self.entries * factor)

    def cholesky(self):
        return np.linalg.cholesky(self.entries)

    def sqrt(self):

        """The symmetric square root C^{1/2}"""

        w, v = np.linalg.eigh(self.entries)

        return (v * np.sqrt(w)).dot(v.T)

    def __array__(self, dtype=None, copy=None):

        if dtype is None:
            return self.entries.copy()

        return self.entries.astype(dtype)

    def __repr__(self):
        return 'CovarianceMatrix(p={:d})'.format(self.p)


def as_covariance(value):

    if isinstance(value, CovarianceMatrix):
        return value

    return CovarianceMatrix(value)


def slope_norm(lam, v):

    """
    The sorted-L1 norm J_lambda(v) = sum_i lambda_i |v|_(i)

    Args:
        lam (LambdaVector or array-like)
        v (array-like)

    Returns:
        float
    """

    lam = as_lambda(lam)
    v = as_vector(v)

    check_lengths(lam=lam.values, v=v)

    return float(np.dot(lam.values, np.sort(np.abs(v))[::-1]))


def _rank_levels(keys, start_at_zero):

    """
    Assigns consecutive ranks to sorted keys, merging neighbours within tolerance

    Args:
        keys (list of tuples): (index, block, value) sorted by (block, value).
        start_at_zero (bool): Whether a value within tolerance of zero gets rank 0.
    """

    ranks = dict()

    rank = 0
    previous = None

    for index, block, value in keys:

        if previous is None:

            if start_at_zero and _same_level(value, 0.0):
                rank = 0
            else:
                rank = 1

        elif block != previous[0] or not _same_level(value, previous[1]):
            rank += 1

        ranks[index] = rank
        previous = (block, value)

    return ranks


def pattern(v):

    """
    The SLOPE pattern rank(|v_i|) * sgn(v_i)

    Args:
        v (array-like)

    Returns:
        SlopePattern
    """

    v = as_vector(v)

    magnitudes = np.abs(v)
    order = np.argsort(magnitudes, kind='stable')

    ranks = _rank_levels([(i, 0, magnitudes[i]) for i in order], True)

    entries = np.array([ranks[i] for i in range(v.size)], dtype='int64')
    entries = entries * np.where(v < 0, -1, 1)

    return SlopePattern(entries)


def clusters(p):

    """
    Decomposes a pattern into its zero cluster and ordered signed clusters

    Args:
        p (SlopePattern or array-like)

    Returns:
        ClusterPartition
    """

    p = as_pattern(p)

    entries = p.entries
    magnitudes = np.abs(entries)

    zero_cluster = tuple(int(i) for i in np.flatnonzero(magnitudes == 0))

    nonzero_clusters = [tuple(int(i) for i in np.flatnonzero(magnitudes == j))
                        for j in range(1, p.n_clusters + 1)]

    signs = dict((int(i), int(np.sign(entries[i]))) for i in np.flatnonzero(entries))

    return ClusterPartition(p.p, zero_cluster, nonzero_clusters, signs)


def reconstruct_pattern(partition):

    """
    Rebuilds the pattern from a ClusterPartition
    """

    entries = np.zeros(partition.p, dtype='int64')

    for j, cluster in enumerate(partition.nonzero_clusters):
        for i in cluster:
            entries[i] = (j + 1) * partition.signs[i]

    return SlopePattern(entries)


def refines(a, b):

    """
    Checks the partial order a <= b: every cluster of `a` lies inside a cluster of `b`

    Args:
        a (ClusterPartition or SlopePattern)
        b (ClusterPartition or SlopePattern)
    """

    if not isinstance(a, ClusterPartition):
        a = clusters(a)

    if not isinstance(b, ClusterPartition):
        b = clusters(b)

    b_blocks = b.blocks()

    return all(any(block <= other for other in b_blocks) for block in a.blocks())


def limiting_pattern(beta0, u):

    """
    The limiting pattern patt_beta0(u) = lim_{eps -> 0+} patt(beta0 + eps * u)

    The clusters of beta0 are refined by the sign-corrected entries of u;
    the zero cluster of beta0 is refined by |u|.

    Args:
        beta0 (array-like)
        u (array-like)

    Returns:
        SlopePattern
    """

    beta0 = as_vector(beta0, 'beta0')
    u = as_vector(u, 'u')

    check_lengths(beta0=beta0, u=u)

    base = pattern(beta0).entries

    block = np.abs(base)
    signs = np.where(base < 0, -1.0, 1.0)

    sub = np.where(block > 0, signs * u, np.abs(u))

    zero = set(i for i in range(u.size) if block[i] == 0 and _same_level(sub[i], 0.0))
    rest = [int(i) for i in np.lexsort((sub, block)) if int(i) not in zero]

    ranks = _rank_levels([(i, block[i], sub[i]) for i in rest], False)

    entries = np.zeros(u.size, dtype='int64')

    for i in rest:

        sign = signs[i] if block[i] > 0 else np.sign(u[i])
        entries[i] = ranks[i] * int(sign)

    return SlopePattern(entries)


def sorting_permutation(magnitudes):

    """
    Indices sorting magnitudes in descending order, ties by ascending index
    """

    return np.argsort(-np.asarray(magnitudes, dtype='float64'), kind='stable')


def directional_derivative(lam, beta0, u):

    """
    The one-sided directional derivative J'_lambda(beta0; u)

    Args:
        lam (LambdaVector or array-like)
        beta0 (array-like)
        u (array-like)

    Returns:
        float
    """

    lam = as_lambda(lam)
    beta0 = as_vector(beta0, 'beta0')
    u = as_vector(u, 'u')

    check_lengths(lam=lam.values, beta0=beta0, u=u)

    limit = limiting_pattern(beta0, u)
    base = pattern(beta0).entries

    weights = np.empty(u.size, dtype='float64')
    weights[sorting_permutation(np.abs(limit.entries))] = lam.values

    terms = np.where(base != 0, np.sign(base) * u, np.abs(u))

    return float(np.dot(weights, terms))


def bhq_lambdas(p, q, scale=1.0):

    """
    BHq penalties lambda_i = scale * Phi^{-1}(1 - i * q / (2p))

    Args:
        p (int): The dimension.
        q (float): The target FDR level, in (0, 1).
        scale (Optional[float]): The noise scale (sigma, or sqrt(delta) for robust losses).

    Returns:
        LambdaVector
    """

    if not 0 < q < 1:

        logger.error('  q must lie in (0,1), got {}.'.format(q))
        raise InvalidLambdaError('q must lie in (0,1)')

    if p < 1:
        raise InvalidLambdaError('p must be a positive integer')

    if scale <= 0:
        raise InvalidLambdaError('scale must be positive')

    i = np.arange(1, p + 1, dtype='float64')

    return LambdaVector(scale * norm.ppf(1.0 - i * q / (2.0 * p)))


def cluster_gap(*vectors):

    """
    The smallest positive gap between distinct absolute values, zero included

    Returns 1 when every vector has a single level.
    """

    gaps = list()

    for v in vectors:

        levels = np.unique(np.r_[0.0, np.abs(as_vector(v))])
        diffs = np.diff(levels)
        diffs = diffs[diffs > TAU_CLUSTER]

        if diffs.size:
            gaps.append(diffs.min())

    return float(min(gaps)) if gaps else 1.0


def pattern_matrix(beta0):

    """
    U_beta0 = S_beta0 (1_{I_m} | ... | 1_{I_1}), highest cluster first

    Args:
        beta0 (array-like)

    Returns:
        2d array of shape (p, m)
    """

    partition = clusters(pattern(beta0))

    u = np.zeros((partition.p, partition.m), dtype='float64')

    for column, cluster in enumerate(reversed(partition.nonzero_clusters)):
        for i in cluster:
            u[i, column] = partition.signs[i]

    return u


def lambda_zero(lam, beta0):

    """
    Lambda_0 = S_beta0 Pi_beta0 lambda (S = +1 on the zero cluster)
    """

    lam = as_lambda(lam)
    beta0 = as_vector(beta0, 'beta0')

    check_lengths(lam=lam.values, beta0=beta0)

    base = pattern(beta0).entries

    out = np.empty(beta0.size, dtype='float64')
    out[sorting_permutation(np.abs(base))] = lam.values

    return out * np.where(base < 0, -1.0, 1.0)


def enumerate_patterns(p):

    """
    Lists every valid SLOPE pattern of length p

    Args:
        p (int)

    Returns:
        list of SlopePattern, sorted
    """

    found = list()

    for n_clusters in range(p + 1):

        for ranks in itertools.product(range(n_clusters + 1), repeat=p):

            if set(ranks) - {0} != set(range(1, n_clusters + 1)):
                continue

            nonzero = [i for i in range(p) if ranks[i] > 0]

            for signs in itertools.product((1, -1), repeat=len(nonzero)):

                entries = list(ranks)

                for i, s in zip(nonzero, signs):
                    entries[i] *= s

                found.append(SlopePattern(entries))

    return sorted(found)


def block_ranges(partition):

    """
    Contiguous lambda index ranges for each cluster

    The highest-rank cluster receives the largest penalties and the zero
    cluster the smallest |I_0|.

    Args:
        partition (ClusterPartition)

    Returns:
        dict: Cluster rank (0 for I_0) -> (start, stop).
    """

    ranges = dict()
    start = 0

    for j in range(partition.m, 0, -1):

        stop = start + len(partition.nonzero_clusters[j-1])
        ranges[j] = (start, stop)
        start = stop

    ranges[0] = (start, partition.p)

    return ranges
