"""
Monte Carlo campaigns: finite-sample SLOPE, the limiting sampler,
pattern recovery and attainability
"""

from __future__ import division
from future.utils import viewitems

import copy
from collections import Counter

from .errors import logger, ConvergenceError, DimensionError, ExperimentError, UnsupportedLossError
from .core import TAU_CLUSTER, as_lambda, as_vector, as_covariance, check_lengths, pattern, \
    limiting_pattern, bhq_lambdas, pattern_matrix, lambda_zero, enumerate_patterns, SlopePattern
from .losses import LossSpec, NoiseSpec, LossConstants, loss_constants
from .solvers import SolverOptions, LimitProblem, solve_slope_ls, solve_slope_huber, \
    solve_slope_quantile, solve_limit_problem
from .geometry import attainable

# NumPy
try:
    import numpy as np
except:
    logger.error('NumPy must be installed')
    raise ImportError

# joblib
try:
    from joblib import Parallel, delayed
except:
    logger.error('joblib must be installed')
    raise ImportError


FAILURE_BUDGET = 0.01


def replication_seed(seed, replication):

    """
    An independent RNG stream for one replication

    Args:
        seed (int): The campaign seed.
        replication (int)

    Returns:
        numpy.random.SeedSequence
    """

    return np.random.SeedSequence(seed, spawn_key=(replication,))


class ModelSpec(object):

    """
    The data model y = X beta0 + eps with X rows ~ N(0, C)

    Args:
        beta0 (array-like)
        covariance (CovarianceMatrix or 2d array-like)
        noise (NoiseSpec or None): None gives eps = 0.
        loss (Optional[LossSpec]): The loss the estimator minimizes.
    """

    def __init__(self, beta0, covariance, noise, loss=None):

        self.beta0 = as_vector(beta0, 'beta0')
        self.covariance = as_covariance(covariance)
        self.noise = noise
        self.loss = LossSpec.quadratic() if loss is None else loss

        check_lengths(beta0=self.beta0, covariance=self.covariance.entries)

        if noise is not None:
            self.constants()

    @property
    def p(self):
        return self.beta0.size

    @property
    def null_count(self):

        """p0, the number of true zeros"""

        return int(np.sum(pattern(self.beta0).entries == 0))

    def constants(self):

        if self.noise is None:

            if self.loss.kind == 'quantile':
                raise UnsupportedLossError('quantile loss needs a noise density')

            return LossConstants(0.0, 1.0)

        return loss_constants(self.loss, self.noise)

    def to_dict(self):

        return {'beta0': self.beta0.tolist(),
                'covariance': self.covariance.entries.tolist(),
                'noise': None if self.noise is None else self.noise.to_dict(),
                'loss': self.loss.to_dict()}


class ExperimentConfig(object):

    """
    A finite-sample campaign

    Args:
        model (ModelSpec)
        n (int): The sample size.
        replications (int)
        lambda_rule (dict): {'kind': 'explicit', 'values': [...]} or
            {'kind': 'bhq', 'q': float, 'scale': float}. The estimator uses sqrt(n) * lambda.
        seed (int)
        solver_opts (Optional[SolverOptions])
    """

    def __init__(self, model, n, replications, lambda_rule, seed, solver_opts=None):

        self.model = model
        self.n = int(n)
        self.replications = int(replications)
        self.lambda_rule = dict(lambda_rule)
        self.seed = int(seed)
        self.solver_opts = SolverOptions() if solver_opts is None else solver_opts

        if self.replications < 1:

            logger.error('  At least one replication is needed.')
            raise ValueError('replications must be at least 1')

        if self.n < model.p:

            logger.error('  The sample size must be at least p.')
            raise ValueError('n must be at least p')

        check_lengths(lam=self.base_lambda().values, beta0=model.beta0)

    def base_lambda(self):

        """The limiting penalty lambda"""

        if self.lambda_rule['kind'] == 'bhq':

            return bhq_lambdas(self.model.p,
                               self.lambda_rule['q'],
                               scale=self.lambda_rule.get('scale', 1.0))

        return as_lambda(self.lambda_rule['values'])

    def sample_lambda(self):

        """The penalty sqrt(n) * lambda used at sample size n"""

        return self.base_lambda().scaled(np.sqrt(self.n))

    def with_sample_size(self, n):

        other = copy.copy(self)
        other.n = int(n)

        return other

    def to_dict(self):

        return {'model': self.model.to_dict(),
                'n': self.n,
                'replications': self.replications,
                'lambda_rule': self.lambda_rule,
                'seed': self.seed,
                'solver': self.solver_opts.to_dict()}


class PatternDistribution(object):

    """
    Counts of observed patterns

    Args:
        counts (Optional[dict]): SlopePattern -> count.
    """

    def __init__(self, counts=None):

        self.counts = Counter()

        if counts:
            for key, value in viewitems(counts):
                self.counts[key if isinstance(key, SlopePattern) else SlopePattern(key)] += int(value)

    @property
    def total(self):
        return int(sum(self.counts.values()))

    def add(self, p):
        self.counts[p] += 1

    def frequency(self, p):

        if not isinstance(p, SlopePattern):
            p = SlopePattern(p)

        total = self.total

        return self.counts.get(p, 0) / total if total else 0.0

    def most_common(self, k=None):
        return self.counts.most_common(k)

    def merge(self, other):

        merged = PatternDistribution(self.counts)
        merged.counts.update(other.counts)

        return merged

    def support(self):
        return sorted(self.counts)

    def to_dict(self):
        return dict((str(p), self.counts[p]) for p in sorted(self.counts))

    def __len__(self):
        return len(self.counts)

    def __repr__(self):
        return 'PatternDistribution(patterns={:d}, total={:d})'.format(len(self.counts), self.total)


class FdrReport(object):

    """
    FDR and power estimates over replications

    Args:
        fdr_estimate (float)
        power_estimate (float)
        standard_error (float): The FDR standard error, sample std / sqrt(R).
        replications (int)
    """

    def __init__(self, fdr_estimate, power_estimate, standard_error, replications):

        self.fdr_estimate = float(fdr_estimate)
        self.power_estimate = float(power_estimate)
        self.standard_error = float(standard_error)
        self.replications = int(replications)

    @classmethod
    def from_contributions(cls, fdr_contributions, power_contributions):

        fdr_contributions = np.asarray(fdr_contributions, dtype='float64')
        power_contributions = np.asarray(power_contributions, dtype='float64')

        r = fdr_contributions.size

        if r == 0:
            raise ExperimentError('no successful replications')

        se = float(np.std(fdr_contributions, ddof=1) / np.sqrt(r)) if r > 1 else 0.0

        return cls(fdr_contributions.mean(), power_contributions.mean(), se, r)

    def to_dict(self):

        return {'fdr': self.fdr_estimate,
                'power': self.power_estimate,
                'se': self.standard_error,
                'replications': self.replications}

    def __repr__(self):
        return 'FdrReport(fdr={:.4f}, se={:.4f}, power={:.4f}, R={:d})'.format(self.fdr_estimate,
                                                                             self.standard_error,
                                                                             self.power_estimate,
                                                                             self.replications)


class SimulationResult(object):

    """
    The output of a campaign

    Args:
        patterns (PatternDistribution): patt(beta_hat) or patt(u_hat).
        secondary (PatternDistribution): patt(sqrt(n)(beta_hat - beta0)) for
            finite samples, the limiting pattern patt_beta0(u_hat) for the limiting sampler.
        fdr (FdrReport)
        table (list of dicts): One row per replication (rep, V, R, fdr_contrib, power_contrib).
        failures (int)
        samples (Optional[2d array]): Limiting draws u_hat, one per row.
    """

    def __init__(self, patterns, secondary, fdr, table, failures=0, samples=None):

        self.patterns = patterns
        self.secondary = secondary
        self.fdr = fdr
        self.table = table
        self.failures = failures
        self.samples = samples

    def __iter__(self):
        return iter((self.patterns, self.secondary, self.fdr))


class RecoveryEstimate(object):

    def __init__(self, estimate, standard_error, replications):

        self.estimate = float(estimate)
        self.standard_error = float(standard_error)
        self.replications = int(replications)

    def to_dict(self):
        return {'estimate': self.estimate, 'se': self.standard_error, 'replications': self.replications}

    def __repr__(self):
        return 'RecoveryEstimate({:.4f} +/- {:.4f})'.format(self.estimate, self.standard_error)


def generate_data(model, n, stream_seed):

    """
    Draws (X, y) with X rows ~ N(0, C) and y = X beta0 + eps

    Args:
        model (ModelSpec)
        n (int)
        stream_seed (int or numpy.random.SeedSequence)

    Returns:
        (2d array, 1d array)
    """

    if n < 1:
        raise DimensionError('n must be at least 1')

    rng = np.random.default_rng(stream_seed)

    z = rng.standard_normal((n, model.p))
    X = z.dot(model.covariance.cholesky().T)

    if model.noise is None:
        eps = np.zeros(n, dtype='float64')
    else:
        eps = model.noise.sample(rng, n)

    return X, X.dot(model.beta0) + eps


def _solve(loss, X, y, lam, opts):

    if loss.kind == 'huber':
        return solve_slope_huber(X, y, lam, loss.k, opts)

    if loss.kind == 'quantile':
        return solve_slope_quantile(X, y, lam, loss.alpha, opts)

    return solve_slope_ls(X, y, lam, opts)


def _tally(support, discovered):

    """(V, R, fdr contribution, power contribution)"""

    v = int(np.sum(discovered & ~support))
    r = int(np.sum(discovered))

    n_true = int(np.sum(support))
    power = np.sum(discovered & support) / n_true if n_true else 1.0

    return v, r, v / max(1, r), float(power)


def _finite_replication(config, replication):

    X, y = generate_data(config.model, config.n, replication_seed(config.seed, replication))

    try:
        result = _solve(config.model.loss, X, y, config.sample_lambda(), config.solver_opts)
    except ConvergenceError as e:
        return {'rep': replication, 'failed': True, 'kkt_residual': e.kkt_residual}

    beta_hat = result.solution
    beta0 = config.model.beta0

    support = pattern(beta0).entries != 0
    v, r, fdr_contrib, power_contrib = _tally(support, np.abs(beta_hat) > TAU_CLUSTER)

    return {'rep': replication,
            'failed': False,
            'pattern': pattern(beta_hat),
            'rescaled': pattern(np.sqrt(config.n) * (beta_hat - beta0)),
            'V': v,
            'R': r,
            'fdr_contrib': fdr_contrib,
            'power_contrib': power_contrib}


def _aggregate(records, replications, first_key, second_key, samples=None):

    failures = [rec for rec in records if rec['failed']]

    if len(failures) > FAILURE_BUDGET * replications:

        logger.error('  {:d} of {:d} replications failed to converge.'.format(len(failures), replications))
        raise ExperimentError('{:d} of {:d} replications failed'.format(len(failures), replications))

    if failures:
        logger.warning('  {:d} replications failed to converge and were dropped.'.format(len(failures)))

    first = PatternDistribution()
    second = PatternDistribution()

    table = list()

    for rec in records:

        if rec['failed']:
            continue

        first.add(rec[first_key])
        second.add(rec[second_key])

        table.append(dict((k, rec[k]) for k in ('rep', 'V', 'R', 'fdr_contrib', 'power_contrib')))

    fdr = FdrReport.from_contributions([row['fdr_contrib'] for row in table],
                                       [row['power_contrib'] for row in table])

    return SimulationResult(first, second, fdr, table, failures=len(failures), samples=samples)


def run_finite_sample(config, n_jobs=1):

    """
    Runs SLOPE on independent samples and tallies patterns, FDR and power

    Args:
        config (ExperimentConfig)
        n_jobs (Optional[int]): Parallel replications.

    Returns:
        SimulationResult: patterns of beta_hat, patterns of sqrt(n)(beta_hat - beta0), FdrReport.
    """

    logger.info('  Running {:d} finite-sample replications at n={:d} ...'.format(config.replications, config.n))

    records = Parallel(n_jobs=n_jobs)(delayed(_finite_replication)(config, r)
                                      for r in range(config.replications))

    return _aggregate(records, config.replications, 'pattern', 'rescaled')


def _limiting_replication(model, lam, constants, seed, replication, opts):

    rng = np.random.default_rng(replication_seed(seed, replication))

    w = np.sqrt(constants.delta) * model.covariance.cholesky().dot(rng.standard_normal(model.p))

    problem = LimitProblem(model.covariance.scaled(constants.curvature), w, lam, model.beta0)

    try:
        result = solve_limit_problem(problem, opts)
    except ConvergenceError as e:
        return {'rep': replication, 'failed': True, 'kkt_residual': e.kkt_residual}

    u_hat = result.solution
    limit = limiting_pattern(model.beta0, u_hat)

    support = pattern(model.beta0).entries != 0
    v, r, fdr_contrib, power_contrib = _tally(support, limit.entries != 0)

    return {'rep': replication,
            'failed': False,
            'pattern': pattern(u_hat),
            'limiting': limit,
            'u_hat': u_hat,
            'V': v,
            'R': r,
            'fdr_contrib': fdr_contrib,
            'power_contrib': power_contrib}


def run_limiting(model, lam, replications, seed, opts=None, n_jobs=1, constants=None):

    """
    Samples the limiting minimizer u_hat = argmin V(u)

    Args:
        model (ModelSpec)
        lam (LambdaVector or array-like): The limiting penalty.
        replications (int)
        seed (int)
        opts (Optional[SolverOptions])
        n_jobs (Optional[int])
        constants (Optional[LossConstants]): Overrides loss_constants(model.loss, model.noise).

    Returns:
        SimulationResult: patterns of u_hat, limiting patterns patt_beta0(u_hat),
        FdrReport read off the limiting patterns, and the draws in `samples`.
    """

    lam = as_lambda(lam)

    check_lengths(lam=lam.values, beta0=model.beta0)

    if constants is None:
        constants = model.constants()

    opts = SolverOptions() if opts is None else opts

    logger.info('  Drawing {:d} limiting replications ({}) ...'.format(replications, constants))

    records = Parallel(n_jobs=n_jobs)(delayed(_limiting_replication)(model, lam, constants, seed, r, opts)
                                      for r in range(replications))

    draws = [rec['u_hat'] for rec in records if not rec['failed']]
    samples = np.array(draws) if draws else np.zeros((0, model.p))

    return _aggregate(records, replications, 'pattern', 'limiting', samples=samples)


def recovery_probability(lam, beta0, C, sigma, replications, seed):

    """
    The limiting probability that SLOPE recovers patt(beta0)

    Estimates P[Z in the dual ball], Z ~ N(C^1/2 P C^-1/2 Lambda_0, sigma^2 C^1/2 (I - P) C^1/2)
    with P = C^1/2 U (U'CU)^-1 U' C^1/2 and U the pattern matrix of beta0.

    Args:
        lam (LambdaVector or array-like)
        beta0 (array-like)
        C (CovarianceMatrix or 2d array-like)
        sigma (float)
        replications (int)
        seed (int)

    Returns:
        RecoveryEstimate
    """

    lam = as_lambda(lam)
    beta0 = as_vector(beta0, 'beta0')
    C = as_covariance(C)

    check_lengths(lam=lam.values, beta0=beta0, C=C.entries)

    c = C.entries
    root = C.sqrt()

    u = pattern_matrix(beta0)
    lambda0 = lambda_zero(lam, beta0)

    p = beta0.size

    if u.shape[1] == 0:

        projector = np.zeros((p, p), dtype='float64')
        mean = np.zeros(p, dtype='float64')

    else:

        gram = u.T.dot(c).dot(u)

        try:
            gram_inv_ut = np.linalg.solve(gram, u.T)
        except np.linalg.LinAlgError:

            logger.error('  U\'CU is singular.')
            raise

        projector = root.dot(u).dot(gram_inv_ut).dot(root)

        # C^1/2 P C^-1/2 Lambda_0 = C U (U'CU)^-1 U' Lambda_0
        mean = c.dot(u).dot(gram_inv_ut.dot(lambda0))

    rng = np.random.default_rng(np.random.SeedSequence(seed))

    xi = rng.standard_normal((replications, p))
    z = mean + sigma * xi.dot((root.dot(np.eye(p) - projector)).T)

    inside = _dual_ball_rows(lam.values, z)

    estimate = inside.mean()
    se = np.sqrt(estimate * (1.0 - estimate) / replications)

    return RecoveryEstimate(estimate, se, replications)


def _dual_ball_rows(lam_values, z, tol=1e-9):

    """Row-wise dual ball membership"""

    partial = np.cumsum(-np.sort(-np.abs(z), axis=1), axis=1)

    return np.all(partial <= np.cumsum(lam_values) + tol, axis=1)


def compare_distributions(a, b):

    """
    Total variation distance between two empirical pattern distributions

    Args:
        a (PatternDistribution)
        b (PatternDistribution)

    Returns:
        float in [0, 1]
    """

    if a.total == 0 or b.total == 0:

        logger.error('  Cannot compare an empty pattern distribution.')
        raise ValueError('pattern distributions must be nonempty')

    keys = set(a.counts) | set(b.counts)

    return 0.5 * sum(abs(a.counts.get(k, 0) / a.total - b.counts.get(k, 0) / b.total) for k in keys)


def attainability_sweep(lam, beta0, C, sigma, replications, seed, n_jobs=1, max_p=4, strict=False):

    """
    Joins limiting pattern frequencies with the attainability criterion

    Args:
        lam (LambdaVector or array-like)
        beta0 (array-like)
        C (CovarianceMatrix or 2d array-like)
        sigma (float)
        replications (int)
        seed (int)
        n_jobs (Optional[int])
        max_p (Optional[int]): The largest p to enumerate.
        strict (Optional[bool]): Raise ExperimentError when a frequency disagrees with its flag.

    Returns:
        dict: SlopePattern -> (frequency, attainable flag)
    """

    beta0 = as_vector(beta0, 'beta0')

    if beta0.size > max_p:

        logger.error('  Pattern enumeration is limited to p <= {:d}.'.format(max_p))
        raise ValueError('p={:d} is too large to enumerate patterns'.format(beta0.size))

    model = ModelSpec(beta0, C, NoiseSpec.gaussian(sigma))

    result = run_limiting(model, lam, replications, seed, n_jobs=n_jobs)

    sweep = dict()
    mismatches = list()

    for p in enumerate_patterns(beta0.size):

        frequency = result.patterns.frequency(p)
        flag = attainable(lam, beta0, p)

        sweep[p] = (frequency, flag)

        if (frequency > 0) != flag:
            mismatches.append(p)

    if mismatches:

        logger.warning('  Frequencies disagree with attainability for {}.'.format(', '.join(str(p) for p in mismatches)))

        if strict:
            raise ExperimentError('{:d} patterns disagree with attainability'.format(len(mismatches)))

    return sweep


def empirical_covariance(samples):
    return np.atleast_2d(np.cov(np.asarray(samples, dtype='float64'), rowvar=False))


def frobenius_relative_error(estimate, reference):

    """||estimate - reference||_F / ||reference||_F"""

    reference = np.asarray(reference, dtype='float64')

    return float(np.linalg.norm(np.asarray(estimate) - reference) / np.linalg.norm(reference))


def tv_convergence(config, sample_sizes, limiting_replications=None, n_jobs=1):

    """
    Total variation between patt(sqrt(n)(beta_hat - beta0)) and patt(u_hat) per sample size

    Args:
        config (ExperimentConfig)
        sample_sizes (list of int)
        limiting_replications (Optional[int]): Defaults to config.replications.
        n_jobs (Optional[int])

    Returns:
        list of (n, tv)
    """

    limiting_replications = config.replications if limiting_replications is None else limiting_replications

    limit = run_limiting(config.model, config.base_lambda(), limiting_replications,
                         config.seed + 1, opts=config.solver_opts, n_jobs=n_jobs)

    out = list()

    for n in sample_sizes:

        finite = run_finite_sample(config.with_sample_size(n), n_jobs=n_jobs)
        tv = compare_distributions(finite.secondary, limit.patterns)

        logger.info('  n={:d}: TV={:.4f}'.format(n, tv))

        out.append((n, tv))

    return out
