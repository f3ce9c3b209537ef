"""
Subdifferential polytopes of the SLOPE norm
"""

from __future__ import division

import math
import itertools

from .errors import logger, DimensionError, VertexCapError
from .core import as_lambda, as_vector, as_pattern, check_lengths, clusters, pattern, \
    limiting_pattern, refines, block_ranges

# NumPy
try:
    import numpy as np
except:
    logger.error('NumPy must be installed')
    raise ImportError

# SciPy
try:
    from scipy.optimize import linprog
except:
    logger.error('SciPy must be installed')
    raise ImportError


VERTEX_CAP = 100000
MAJORIZATION_TOLERANCE = 1e-9
WOLFE_TOLERANCE = 1e-10


class VertexPolytope(object):

    """
    The convex hull of a finite vertex list

    Args:
        vertices (2d array-like): One vertex per row.
    """

    def __init__(self, vertices):

        vertices = np.array(vertices, dtype='float64')

        if vertices.ndim == 1:
            vertices = vertices.reshape(1, -1)

        if vertices.ndim != 2 or vertices.shape[0] == 0:

            logger.error('  A polytope needs at least one vertex.')
            raise DimensionError('polytope vertices must be a nonempty 2d array')

        vertices.flags.writeable = False

        self.vertices = vertices

    @property
    def dimension(self):
        return self.vertices.shape[1]

    def __len__(self):
        return self.vertices.shape[0]

    def vertex_set(self, decimals=12):

        """The vertices as a set of rounded tuples"""

        return set(tuple(row) for row in np.round(self.vertices, decimals) + 0.0)

    def translated(self, offset):
        return VertexPolytope(self.vertices + as_vector(offset))

    def __repr__(self):
        return 'VertexPolytope(n_vertices={:d}, dimension={:d})'.format(len(self), self.dimension)


def block_assignment(lam, p):

    """
    Assigns each cluster of a pattern its contiguous block of lambda indices

    Args:
        lam (LambdaVector or array-like)
        p (SlopePattern or array-like)

    Returns:
        dict: Cluster rank (0 for I_0) -> (start, stop).
    """

    lam = as_lambda(lam)
    p = as_pattern(p)

    check_lengths(lam=lam.values, pattern=p.entries)

    return block_ranges(clusters(p))


class SubdifferentialSpec(object):

    """
    The subdifferential polytope of J_lambda at a pattern

    Args:
        lam (LambdaVector or array-like)
        p (SlopePattern or array-like)
    """

    def __init__(self, lam, p):

        self.lam = as_lambda(lam)
        self.pattern = as_pattern(p)
        self.block_assignment = block_assignment(self.lam, self.pattern)
        self.partition = clusters(self.pattern)

    @classmethod
    def from_pattern(cls, lam, p):
        return cls(lam, p)

    @classmethod
    def from_vector(cls, lam, v):

        """The subdifferential of J_lambda at the vector v"""

        return cls(lam, pattern(v))

    @property
    def p(self):
        return self.pattern.p

    def block(self, j):

        start, stop = self.block_assignment[j]

        return self.lam.values[start:stop]

    def vertex_count(self):

        """The number of (possibly repeated) vertices enumeration would produce"""

        count = 1

        for cluster in self.partition.nonzero_clusters:
            count *= math.factorial(len(cluster))

        n_zero = len(self.partition.zero_cluster)

        return count * (2 ** n_zero) * math.factorial(n_zero)

    def __repr__(self):
        return 'SubdifferentialSpec(pattern={})'.format(str(self.pattern))


def _cluster_pieces(spec):

    """
    Yields (indices, local vertex list) for every cluster
    """

    partition = spec.partition

    for j, cluster in enumerate(partition.nonzero_clusters, start=1):

        signs = np.array([partition.signs[i] for i in cluster], dtype='float64')
        block = spec.block(j)

        local = [signs * np.array(perm) for perm in set(itertools.permutations(block))]

        yield list(cluster), local

    if partition.zero_cluster:

        block = spec.block(0)
        n = len(block)

        local = set()

        for perm in itertools.permutations(block):
            for signs in itertools.product((1.0, -1.0), repeat=n):
                local.add(tuple(s * v + 0.0 for s, v in zip(signs, perm)))

        yield list(partition.zero_cluster), [np.array(v) for v in local]


def subdiff_vertices(spec, cap=VERTEX_CAP):

    """
    Enumerates the vertices S_p Sigma Pi_p lambda of the subdifferential

    Args:
        spec (SubdifferentialSpec)
        cap (Optional[int]): The largest vertex count allowed.

    Returns:
        VertexPolytope
    """

    count = spec.vertex_count()

    if count > cap:

        logger.error('  The subdifferential at {} has {:d} vertices (cap {:d}).'.format(str(spec.pattern), count, cap))
        raise VertexCapError('vertex count {:d} exceeds the cap of {:d}'.format(count, cap))

    pieces = list(_cluster_pieces(spec))

    rows = list()

    for combination in itertools.product(*[local for __, local in pieces]):

        vertex = np.zeros(spec.p, dtype='float64')

        for (indices, __), values in zip(pieces, combination):
            vertex[indices] = values

        rows.append(vertex)

    return VertexPolytope(np.unique(np.array(rows), axis=0))


def _majorized(w, block, terminal_equality, tol):

    lhs = np.cumsum(np.sort(w)[::-1])
    rhs = np.cumsum(np.sort(block)[::-1])

    if np.any(lhs > rhs + tol):
        return False

    if terminal_equality and abs(lhs[-1] - rhs[-1]) > tol:
        return False

    return True


def subdiff_membership(spec, v, tol=MAJORIZATION_TOLERANCE):

    """
    Checks v in the subdifferential by per-cluster majorization

    Args:
        spec (SubdifferentialSpec)
        v (array-like)
        tol (Optional[float]): The absolute tolerance on partial sums.

    Returns:
        bool
    """

    v = as_vector(v)

    check_lengths(spec=spec.pattern.entries, v=v)

    partition = spec.partition

    for j, cluster in enumerate(partition.nonzero_clusters, start=1):

        idx = list(cluster)
        signs = np.array([partition.signs[i] for i in cluster], dtype='float64')

        if not _majorized(signs * v[idx], spec.block(j), True, tol):
            return False

    if partition.zero_cluster:

        if not _majorized(np.abs(v[list(partition.zero_cluster)]), spec.block(0), False, tol):
            return False

    return True


def dual_ball_membership(lam, v, tol=MAJORIZATION_TOLERANCE):

    """
    Checks v in the dual unit ball of J_lambda, which is the subdifferential at zero
    """

    lam = as_lambda(lam)
    v = as_vector(v)

    check_lengths(lam=lam.values, v=v)

    return _majorized(np.abs(v), lam.values, False, tol)


def hull_membership(polytope, v):

    """
    Exact convex hull membership by a feasibility linear program

    Args:
        polytope (VertexPolytope)
        v (array-like)

    Returns:
        bool
    """

    v = as_vector(v)

    check_lengths(polytope=polytope.vertices[0], v=v)

    k = len(polytope)

    a_eq = np.vstack((polytope.vertices.T, np.ones((1, k))))
    b_eq = np.r_[v, 1.0]

    result = linprog(np.zeros(k), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * k, method='highs')

    return result.status == 0


def _affine_minimizer(points):

    """
    The affine combination of the rows of `points` with the smallest norm
    """

    k = points.shape[0]

    system = np.zeros((k + 1, k + 1), dtype='float64')
    system[:k, :k] = points.dot(points.T)
    system[:k, k] = 1.0
    system[k, :k] = 1.0

    rhs = np.zeros(k + 1, dtype='float64')
    rhs[k] = 1.0

    solution = np.linalg.lstsq(system, rhs, rcond=None)[0]

    return solution[:k]


def nearest_point(polytope, v, tol=WOLFE_TOLERANCE, max_iterations=None):

    """
    The point of a vertex polytope closest to v, by Wolfe's algorithm

    Args:
        polytope (VertexPolytope)
        v (array-like)
        tol (Optional[float]): The optimality gap at which to stop.
        max_iterations (Optional[int])

    Returns:
        (1d array, float): The nearest point and its distance to v.
    """

    v = as_vector(v)

    check_lengths(polytope=polytope.vertices[0], v=v)

    points = polytope.vertices - v

    if len(polytope) == 1:
        return polytope.vertices[0].copy(), float(np.linalg.norm(points[0]))

    if max_iterations is None:
        max_iterations = 50 * len(polytope) + 100

    scale = max(1.0, float(np.max(np.sum(points ** 2, axis=1))))

    active = [int(np.argmin(np.sum(points ** 2, axis=1)))]
    weights = np.array([1.0])
    x = points[active[0]].copy()

    for __ in range(max_iterations):

        products = points.dot(x)
        j = int(np.argmin(products))

        if x.dot(x) - products[j] <= tol * scale or j in active:
            break

        active.append(j)
        weights = np.r_[weights, 0.0]

        while True:

            alpha = _affine_minimizer(points[active])

            if np.all(alpha > 1e-14):

                weights = alpha
                break

            decreasing = alpha < weights
            candidates = (weights - alpha)[decreasing]

            theta = min(1.0, float(np.min(weights[decreasing] / candidates))) if candidates.size else 1.0

            weights = theta * alpha + (1.0 - theta) * weights

            keep = weights > 1e-14

            active = [a for a, kept in zip(active, keep) if kept]
            weights = weights[keep]
            weights /= weights.sum()

            if len(active) == 1:

                weights = np.array([1.0])
                break

        x = weights.dot(points[active])

    return x + v, float(np.linalg.norm(x))


def directed_distance(a, b):

    """max over vertices of a of the distance to conv(b)"""

    return max(nearest_point(b, vertex)[1] for vertex in a.vertices)


def hausdorff_distance(a, b):

    """
    The Hausdorff distance between two vertex polytopes

    Args:
        a (VertexPolytope)
        b (VertexPolytope)

    Returns:
        float
    """

    if a.dimension != b.dimension:

        logger.error('  Polytope dimensions differ ({:d} vs {:d}).'.format(a.dimension, b.dimension))
        raise DimensionError('polytope dimensions differ')

    return max(directed_distance(a, b), directed_distance(b, a))


def affine_dimension(polytope, tol=1e-9):

    """The dimension of the affine hull of the vertices"""

    if len(polytope) == 1:
        return 0

    return int(np.linalg.matrix_rank(polytope.vertices[1:] - polytope.vertices[0], tol=tol))


def dimension_bound(p):

    """
    The largest possible subdifferential dimension at a pattern, p - m

    With a nonempty zero cluster this equals p - |clusters| + 1.
    """

    p = as_pattern(p)

    return p.p - p.n_clusters


def dimension_is_full(lam, p):

    """
    Checks whether the subdifferential at p attains dimension_bound(p)

    Every nonzero cluster of size >= 2 must see a nonconstant lambda block
    and the zero cluster's block must not be identically zero.
    """

    spec = SubdifferentialSpec(lam, p)

    for j, cluster in enumerate(spec.partition.nonzero_clusters, start=1):

        if len(cluster) >= 2:

            block = spec.block(j)

            if np.all(block == block[0]):
                return False

    if spec.partition.zero_cluster and np.all(spec.block(0) == 0):
        return False

    return True


def local_norm(spec, v):

    """
    The support function max over s in the subdifferential of <s, v>

    Computed per cluster by the rearrangement inequality, no enumeration.
    """

    v = as_vector(v)

    check_lengths(spec=spec.pattern.entries, v=v)

    partition = spec.partition
    total = 0.0

    for j, cluster in enumerate(partition.nonzero_clusters, start=1):

        signs = np.array([partition.signs[i] for i in cluster], dtype='float64')
        total += float(np.dot(np.sort(signs * v[list(cluster)])[::-1], spec.block(j)))

    if partition.zero_cluster:
        total += float(np.dot(np.sort(np.abs(v[list(partition.zero_cluster)]))[::-1], spec.block(0)))

    return total


def attainable(lam, beta0, p):

    """
    Checks whether a pattern occurs with positive probability as the pattern
    of the limiting minimizer

    Args:
        lam (LambdaVector or array-like)
        beta0 (array-like)
        p (SlopePattern or array-like)

    Returns:
        bool
    """

    lam = as_lambda(lam)
    beta0 = as_vector(beta0, 'beta0')
    p = as_pattern(p)

    check_lengths(lam=lam.values, beta0=beta0, pattern=p.entries)

    base_pattern = pattern(beta0)
    base = clusters(base_pattern)
    target = clusters(p)

    # Every cluster of p inside a cluster of beta0, zeros only where beta0 is zero.
    if not refines(target, base):
        return False

    if not set(target.zero_cluster) <= set(base.zero_cluster):
        return False

    base_signs = np.sign(base_pattern.entries)

    for cluster in target.nonzero_clusters:

        products = set(int(target.signs[i] * base_signs[i]) for i in cluster)

        if len(products) > 1:
            return False

    return dimension_is_full(lam, limiting_pattern(beta0, p.entries))


def perturbation_distances(lam, p, sample_sizes):

    """
    Hausdorff distances between the subdifferentials at p of J_{lambda_n} and J_lambda,
    with lambda_n = lambda + 1/n

    Args:
        lam (LambdaVector or array-like)
        p (SlopePattern or array-like)
        sample_sizes (list of int)

    Returns:
        list of (n, d_H, ||lambda_n - lambda||_2)
    """

    lam = as_lambda(lam)
    p = as_pattern(p)

    check_lengths(lam=lam.values, pattern=p.entries)

    limit = subdiff_vertices(SubdifferentialSpec(lam, p))

    out = list()

    for n in sample_sizes:

        if n < 1:
            raise ValueError('sample sizes must be positive')

        shifted = as_lambda(lam.values + 1.0 / n)

        distance = hausdorff_distance(subdiff_vertices(SubdifferentialSpec(shifted, p)), limit)

        out.append((int(n), distance, float(np.linalg.norm(shifted.values - lam.values))))

    return out
