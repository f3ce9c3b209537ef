"""
Proximal gradient solvers for SLOPE and for the limiting problem
"""

from __future__ import division

import copy

from .errors import logger, ConvergenceError, DimensionError
from .core import as_lambda, as_vector, as_covariance, check_lengths, slope_norm, directional_derivative, pattern
from .prox import prox_slope, prox_directional
from .losses import huber_loss, huber_score, check_loss, smoothed_check_loss, smoothed_check_score

# NumPy
try:
    import numpy as np
except:
    logger.error('NumPy must be installed')
    raise ImportError


STEP_RULES = ('fixed-lipschitz', 'backtracking')

# Quantile stages stop at a KKT residual of max(kkt_tolerance, STAGE_TOLERANCE_FACTOR * mu).
STAGE_TOLERANCE_FACTOR = 10.0

# Consecutive quantile stages closer than this end the continuation.
CONTINUATION_TOLERANCE = 1e-6


def default_smoothing_schedule(start=0.1, stop=1e-8):

    """mu_k = start * 2^-k while mu_k >= stop"""

    schedule = list()
    mu = start

    while mu >= stop:

        schedule.append(mu)
        mu /= 2.0

    return schedule


class SolverOptions(object):

    """
    Solver settings

    Args:
        max_iterations (Optional[int]): Iterations allowed per solve (per stage for the quantile loss).
        kkt_tolerance (Optional[float]): The scaled prox fixed-point tolerance.
        step_rule (Optional[str]): 'fixed-lipschitz' or 'backtracking'.
        accelerated (Optional[bool]): FISTA if True, ISTA otherwise.
        restart (Optional[bool]): Whether to restart momentum when the objective increases.
        smoothing_schedule (Optional[list]): Decreasing smoothing levels for the quantile loss.
        power_iterations (Optional[int])
        power_tolerance (Optional[float])
        seed (Optional[int]): The power iteration start-vector seed.
    """

    _defaults = dict(max_iterations=50000,
                     kkt_tolerance=1e-8,
                     step_rule='fixed-lipschitz',
                     accelerated=True,
                     restart=True,
                     smoothing_schedule=None,
                     power_iterations=100,
                     power_tolerance=1e-10,
                     seed=0)

    def __init__(self, **kwargs):

        for k, v in self._defaults.items():
            setattr(self, k, v)

        self.set_params(**kwargs)

    def set_params(self, **kwargs):

        for k, v in kwargs.items():

            if k not in self._defaults:
                raise ValueError('unknown solver option {}'.format(k))

            setattr(self, k, v)

        if self.smoothing_schedule is None:
            self.smoothing_schedule = default_smoothing_schedule()

        self.smoothing_schedule = [float(mu) for mu in self.smoothing_schedule]

        self._check()

        return self

    def _check(self):

        if int(self.max_iterations) < 1:
            raise ValueError('max_iterations must be positive')

        if not self.kkt_tolerance > 0 or not self.power_tolerance > 0:

            logger.error('  Solver tolerances must be positive.')
            raise ValueError('tolerances must be positive')

        if self.step_rule not in STEP_RULES:
            raise ValueError('step_rule must be one of {}'.format(', '.join(STEP_RULES)))

        if not self.smoothing_schedule or min(self.smoothing_schedule) <= 0:
            raise ValueError('smoothing_schedule must hold positive values')

        if np.any(np.diff(self.smoothing_schedule) >= 0):
            raise ValueError('smoothing_schedule must be decreasing')

    def copy(self):
        return copy.deepcopy(self)

    def to_dict(self):
        return dict((k, getattr(self, k)) for k in sorted(self._defaults))


class SolveResult(object):

    """
    The output of a solve

    Args:
        solution (1d array): The final iterate, an exact prox output.
        iterations (int)
        kkt_residual (float)
        objective_trace (list)
        diagnostics (Optional[dict])
    """

    def __init__(self, solution, iterations, kkt_residual, objective_trace, diagnostics=None):

        self.solution = solution
        self.iterations = iterations
        self.kkt_residual = kkt_residual
        self.objective_trace = objective_trace
        self.diagnostics = diagnostics if diagnostics is not None else dict()

    def pattern(self):
        return pattern(self.solution)

    def __repr__(self):
        return 'SolveResult(iterations={:d}, kkt_residual={:g})'.format(self.iterations, self.kkt_residual)


class LimitProblem(object):

    """
    The limiting objective V(u) = 0.5 u'C u - u'W + J'_lambda(beta0; u)

    Args:
        C_tilde (CovarianceMatrix or 2d array-like)
        W (array-like)
        lam (LambdaVector or array-like)
        beta0 (array-like)
    """

    def __init__(self, C_tilde, W, lam, beta0):

        self.C_tilde = as_covariance(C_tilde)
        self.W = as_vector(W, 'W')
        self.lam = as_lambda(lam)
        self.beta0 = as_vector(beta0, 'beta0')

        check_lengths(C_tilde=self.C_tilde.entries, W=self.W, lam=self.lam.values, beta0=self.beta0)

    def objective(self, u):

        c = self.C_tilde.entries

        return 0.5 * u.dot(c.dot(u)) - u.dot(self.W) + directional_derivative(self.lam, self.beta0, u)


def power_iteration(matvec, p, iterations=100, tol=1e-10, seed=0):

    """
    Estimates the largest eigenvalue of a symmetric positive semidefinite operator

    Args:
        matvec (callable): v -> A v.
        p (int): The dimension.
        iterations (Optional[int])
        tol (Optional[float]): The relative change at which to stop.
        seed (Optional[int]): The start-vector seed.

    Returns:
        (float, bool): The estimate and whether it converged.
    """

    rng = np.random.default_rng(seed)

    v = rng.standard_normal(p)
    v /= np.linalg.norm(v)

    estimate = 0.0

    for __ in range(iterations):

        w = matvec(v)
        norm_w = np.linalg.norm(w)

        if norm_w == 0:
            return 0.0, True

        previous = estimate
        estimate = float(v.dot(w))
        v = w / norm_w

        if abs(estimate - previous) <= tol * max(abs(estimate), 1e-300):
            return estimate, True

    return estimate, False


def _lipschitz(matvec, p, opts):

    """
    The gradient Lipschitz constant and the step rule to use with it
    """

    estimate, converged = power_iteration(matvec, p,
                                          iterations=opts.power_iterations,
                                          tol=opts.power_tolerance,
                                          seed=opts.seed)

    step_rule = opts.step_rule

    if not converged:

        logger.debug('  The power iteration did not converge; switching to backtracking.')
        step_rule = 'backtracking'

    # A zero operator still needs a positive step.
    lipschitz = max(estimate, 1e-12) * (1.0 + 1e-6)

    return lipschitz, step_rule


class ProximalGradient(object):

    """
    A single-use accelerated proximal gradient run

    Args:
        smooth (callable): x -> f(x).
        gradient (callable): x -> grad f(x).
        penalty (callable): x -> h(x).
        prox (callable): (v, t) -> prox of t * h at v.
        lipschitz (float): The starting Lipschitz estimate of grad f.
        opts (SolverOptions)
        step_rule (str)
        residual_step (Optional[float]): The step used in the fixed-point residual; 1 / lipschitz by default.
        tolerance (Optional[float]): Overrides opts.kkt_tolerance.
        label (Optional[str]): The name used in log and error messages.
    """

    def __init__(self, smooth, gradient, penalty, prox, lipschitz, opts, step_rule,
                 residual_step=None, tolerance=None, label='solve'):

        self.smooth = smooth
        self.gradient = gradient
        self.penalty = penalty
        self.prox = prox
        self.lipschitz = lipschitz
        self.opts = opts
        self.step_rule = step_rule
        self.residual_step = residual_step
        self.tolerance = opts.kkt_tolerance if tolerance is None else tolerance
        self.label = label

    def residual(self, x):

        step = self.residual_step if self.residual_step is not None else 1.0 / self.lipschitz

        gap = x - self.prox(x - step * self.gradient(x), step)

        return float(np.linalg.norm(gap) / (1.0 + np.linalg.norm(x)))

    def _step(self, y, g):

        if self.step_rule == 'fixed-lipschitz':
            return self.prox(y - g / self.lipschitz, 1.0 / self.lipschitz)

        fy = self.smooth(y)

        while True:

            x = self.prox(y - g / self.lipschitz, 1.0 / self.lipschitz)
            d = x - y

            bound = fy + g.dot(d) + 0.5 * self.lipschitz * d.dot(d)

            if self.smooth(x) <= bound + 1e-12 * max(1.0, abs(bound)):
                return x

            self.lipschitz *= 2.0

    def run(self, x0):

        x = np.array(x0, dtype='float64')
        y = x.copy()
        t = 1.0

        value = self.smooth(x) + self.penalty(x)
        trace = [value]
        residual = np.inf

        for iteration in range(1, int(self.opts.max_iterations) + 1):

            x_new = self._step(y, self.gradient(y))
            value_new = self.smooth(x_new) + self.penalty(x_new)

            if self.opts.restart and self.opts.accelerated and t > 1 and value_new > value:

                # Drop the momentum and retry from the last iterate.
                y = x.copy()
                t = 1.0

                x_new = self._step(y, self.gradient(y))
                value_new = self.smooth(x_new) + self.penalty(x_new)

            x_previous = x
            x = x_new
            value = value_new

            trace.append(value)

            residual = self.residual(x)

            if residual <= self.tolerance:

                logger.debug('  {} converged after {:d} iterations (residual {:g}).'.format(self.label,
                                                                                          iteration,
                                                                                          residual))

                return SolveResult(x, iteration, residual, trace, diagnostics={'lipschitz': self.lipschitz})

            if self.opts.accelerated:

                t_new = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
                y = x + ((t - 1.0) / t_new) * (x - x_previous)
                t = t_new

            else:
                y = x

        logger.error('  {} did not converge in {:d} iterations (residual {:g}).'.format(self.label,
                                                                                     int(self.opts.max_iterations),
                                                                                     residual))

        raise ConvergenceError('{} did not converge'.format(self.label),
                               solution=x,
                               kkt_residual=residual,
                               iterations=int(self.opts.max_iterations))


def _regression_inputs(X, y, lam):

    X = np.asarray(X, dtype='float64')
    y = as_vector(y, 'y')
    lam = as_lambda(lam)

    if X.ndim != 2:
        raise DimensionError('X must be two-dimensional')

    if X.shape[0] < 1:
        raise DimensionError('X needs at least one row')

    check_lengths(X_rows=X, y=y)
    check_lengths(X_columns=X.T, lam=lam.values)

    return X, y, lam


def _start(x0, p):

    if x0 is None:
        return np.zeros(p, dtype='float64')

    x0 = as_vector(x0, 'x0')

    if x0.size != p:
        raise DimensionError('the warm start must have length {:d}'.format(p))

    return x0


def _slope_prox(lam):
    return lambda v, t: prox_slope(lam.values * t, v)


def _gram_matvec(X):
    return lambda v: X.T.dot(X.dot(v))


def solve_slope_ls(X, y, lam, opts=None, x0=None):

    """
    Least-squares SLOPE: argmin 0.5 * ||y - X b||^2 + J_lambda(b)

    Args:
        X (2d array): n x p design.
        y (1d array): The response.
        lam (LambdaVector or array-like)
        opts (Optional[SolverOptions])
        x0 (Optional[1d array]): A warm start.

    Returns:
        SolveResult
    """

    opts = SolverOptions() if opts is None else opts
    X, y, lam = _regression_inputs(X, y, lam)

    lipschitz, step_rule = _lipschitz(_gram_matvec(X), X.shape[1], opts)

    def smooth(b):

        r = y - X.dot(b)

        return 0.5 * r.dot(r)

    def gradient(b):
        return -X.T.dot(y - X.dot(b))

    solver = ProximalGradient(smooth, gradient, lambda b: slope_norm(lam, b), _slope_prox(lam),
                              lipschitz, opts, step_rule, label='least-squares SLOPE')

    return solver.run(_start(x0, X.shape[1]))


def solve_slope_huber(X, y, lam, k, opts=None, x0=None):

    """
    Huber SLOPE: argmin sum_i H_k(y_i - X_i'b) + J_lambda(b)

    Args:
        X (2d array)
        y (1d array)
        lam (LambdaVector or array-like)
        k (float): The Huber threshold.
        opts (Optional[SolverOptions])
        x0 (Optional[1d array])

    Returns:
        SolveResult
    """

    if not k > 0:
        raise ValueError('k must be positive')

    opts = SolverOptions() if opts is None else opts
    X, y, lam = _regression_inputs(X, y, lam)

    lipschitz, step_rule = _lipschitz(_gram_matvec(X), X.shape[1], opts)

    def smooth(b):
        return huber_loss(y - X.dot(b), k)

    def gradient(b):
        return -X.T.dot(huber_score(y - X.dot(b), k))

    solver = ProximalGradient(smooth, gradient, lambda b: slope_norm(lam, b), _slope_prox(lam),
                              lipschitz, opts, step_rule, label='Huber SLOPE')

    return solver.run(_start(x0, X.shape[1]))


def solve_slope_quantile(X, y, lam, alpha, opts=None, x0=None):

    """
    Quantile SLOPE: argmin sum_i |y_i - X_i'b|_alpha + J_lambda(b)

    Solved by smoothing continuation. Each stage replaces the check function by
    its Moreau envelope at level mu, warm-started from the previous stage, and
    stops at a KKT residual of max(kkt_tolerance, STAGE_TOLERANCE_FACTOR * mu).
    Residuals are measured with the data step 1 / ||X||^2 so they stay comparable
    across stages. Once mu <= CONTINUATION_TOLERANCE, the continuation ends early
    when a stage moves the iterate by less than CONTINUATION_TOLERANCE.

    Args:
        X (2d array)
        y (1d array)
        lam (LambdaVector or array-like)
        alpha (float): The quantile level in (0,1).
        opts (Optional[SolverOptions])
        x0 (Optional[1d array])

    Returns:
        SolveResult, with diagnostics 'stages', 'stage_change' and 'subgradient_gap'
    """

    if not 0 < alpha < 1:
        raise ValueError('alpha must lie in (0,1)')

    opts = SolverOptions() if opts is None else opts
    X, y, lam = _regression_inputs(X, y, lam)

    data_lipschitz, step_rule = _lipschitz(_gram_matvec(X), X.shape[1], opts)

    penalty = lambda b: slope_norm(lam, b)
    prox = _slope_prox(lam)

    x = _start(x0, X.shape[1])

    stages = list()
    trace = list()
    iterations = 0
    change = np.inf
    result = None

    for mu in opts.smoothing_schedule:

        def smooth(b, mu=mu):
            return smoothed_check_loss(y - X.dot(b), alpha, mu)

        def gradient(b, mu=mu):
            return -X.T.dot(smoothed_check_score(y - X.dot(b), alpha, mu))

        solver = ProximalGradient(smooth, gradient, penalty, prox,
                                  data_lipschitz / mu, opts, step_rule,
                                  residual_step=1.0 / data_lipschitz,
                                  tolerance=max(opts.kkt_tolerance, STAGE_TOLERANCE_FACTOR * mu),
                                  label='quantile SLOPE (mu={:g})'.format(mu))

        result = solver.run(x)

        change = float(np.linalg.norm(result.solution - x))
        x = result.solution

        iterations += result.iterations
        trace.extend(result.objective_trace)

        stages.append({'mu': mu,
                       'iterations': result.iterations,
                       'kkt_residual': result.kkt_residual,
                       'change': change})

        logger.debug('  Quantile stage mu={:g} took {:d} iterations.'.format(mu, result.iterations))

        if len(stages) > 1 and mu <= CONTINUATION_TOLERANCE and change < CONTINUATION_TOLERANCE:

            logger.debug('  The continuation settled at mu={:g}.'.format(mu))
            break

    # Subgradient check against the nonsmooth loss: scores outside the final
    # smoothing window take their exact one-sided values.
    mu = stages[-1]['mu']
    r = y - X.dot(x)

    score = np.where(r > mu * alpha, alpha,
                     np.where(r < -mu * (1.0 - alpha), alpha - 1.0, smoothed_check_score(r, alpha, mu)))

    step = 1.0 / data_lipschitz
    v = x + step * X.T.dot(score)
    gap = float(np.linalg.norm(x - prox(v, step)) / (1.0 + np.linalg.norm(x)))

    diagnostics = {'stages': stages,
                   'stage_change': change,
                   'subgradient_gap': gap,
                   'objective': check_loss(r, alpha) + penalty(x),
                   'lipschitz': data_lipschitz}

    return SolveResult(x, iterations, result.kkt_residual, trace, diagnostics=diagnostics)


def solve_limit_problem(prob, opts=None, x0=None):

    """
    Minimizes the limiting objective 0.5 u'C u - u'W + J'_lambda(beta0; u)

    Args:
        prob (LimitProblem)
        opts (Optional[SolverOptions])
        x0 (Optional[1d array])

    Returns:
        SolveResult
    """

    opts = SolverOptions() if opts is None else opts

    c = prob.C_tilde.entries
    w = prob.W
    lam = prob.lam
    beta0 = prob.beta0

    lipschitz, step_rule = _lipschitz(c.dot, c.shape[0], opts)

    def smooth(u):
        return 0.5 * u.dot(c.dot(u)) - u.dot(w)

    def gradient(u):
        return c.dot(u) - w

    solver = ProximalGradient(smooth, gradient,
                              lambda u: directional_derivative(lam, beta0, u),
                              lambda v, t: prox_directional(lam.values * t, beta0, v),
                              lipschitz, opts, step_rule, label='limit problem')

    return solver.run(_start(x0, c.shape[0]))
