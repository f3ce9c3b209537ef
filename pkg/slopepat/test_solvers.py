import numpy as np
import pytest

from scipy.optimize import linprog

from .errors import ConvergenceError, DimensionError
from .core import pattern, limiting_pattern, slope_norm, pattern_matrix, lambda_zero
from .prox import prox_slope, prox_directional
from .geometry import SubdifferentialSpec, subdiff_membership
from .losses import check_loss, huber_loss, huber_score, smoothed_check_loss, smoothed_check_score
from .solvers import SolverOptions, LimitProblem, power_iteration, default_smoothing_schedule, \
    solve_slope_ls, solve_slope_huber, solve_slope_quantile, solve_limit_problem


def _design(n=60, p=5, seed=0):

    rng = np.random.default_rng(seed)

    X = rng.standard_normal((n, p))
    beta = np.r_[3.0, -3.0, 1.5, np.zeros(p - 3)]

    return X, X.dot(beta) + 0.5 * rng.standard_normal(n)


def test_solver_options():

    opts = SolverOptions()

    assert opts.max_iterations == 50000
    assert opts.kkt_tolerance == 1e-8
    assert opts.smoothing_schedule[0] == 0.1
    assert opts.smoothing_schedule[-1] >= 1e-8
    assert np.all(np.diff(opts.smoothing_schedule) < 0)

    with pytest.raises(ValueError):
        SolverOptions(step_rule='armijo')

    with pytest.raises(ValueError):
        SolverOptions(tolerance=1e-3)

    with pytest.raises(ValueError):
        SolverOptions(smoothing_schedule=[1e-3, 1e-2])

    assert opts.copy().set_params(max_iterations=10).max_iterations == 10
    assert opts.max_iterations == 50000


def test_default_smoothing_schedule():

    schedule = default_smoothing_schedule(0.1, 0.01)

    np.testing.assert_allclose(schedule, [0.1, 0.05, 0.025, 0.0125])


def test_power_iteration():

    estimate, converged = power_iteration(np.diag([3.0, 1.0, 0.5]).dot, 3)

    assert converged
    assert estimate == pytest.approx(3.0, rel=1e-8)

    assert power_iteration(lambda v: 0.0 * v, 3) == (0.0, True)


def test_orthogonal_design_reduces_to_prox():

    y = np.array([4.0, -3.5, 1.0, 0.2])
    lam = [2.0, 1.5, 1.0, 0.5]

    result = solve_slope_ls(np.eye(4), y, lam)

    np.testing.assert_allclose(result.solution, prox_slope(lam, y), atol=1e-7)
    assert result.kkt_residual <= 1e-8
    assert result.pattern() == pattern(prox_slope(lam, y))


def test_least_squares_kkt():

    X, y = _design()
    lam = np.linspace(20.0, 5.0, 5)

    result = solve_slope_ls(X, y, lam)
    b = result.solution

    assert subdiff_membership(SubdifferentialSpec.from_vector(lam, b), X.T.dot(y - X.dot(b)), tol=1e-5)

    trace = np.array(result.objective_trace)

    assert trace[-1] <= trace[0]
    assert trace[-1] == pytest.approx(0.5 * np.sum((y - X.dot(b)) ** 2) + slope_norm(lam, b))


def test_step_rules_and_momentum_agree():

    X, y = _design(seed=1)
    lam = np.linspace(15.0, 3.0, 5)

    reference = solve_slope_ls(X, y, lam).solution

    for opts in (SolverOptions(step_rule='backtracking'),
                 SolverOptions(accelerated=False),
                 SolverOptions(restart=False)):

        np.testing.assert_allclose(solve_slope_ls(X, y, lam, opts).solution, reference, atol=1e-6)


def test_warm_start_and_dimension_checks():

    X, y = _design(seed=2)
    lam = np.linspace(15.0, 3.0, 5)

    cold = solve_slope_ls(X, y, lam)
    warm = solve_slope_ls(X, y, lam, x0=cold.solution)

    assert warm.iterations <= cold.iterations

    with pytest.raises(DimensionError):
        solve_slope_ls(X, y[:-1], lam)

    with pytest.raises(DimensionError):
        solve_slope_ls(X, y, lam[:-1])


def test_convergence_error_carries_the_last_iterate():

    X, y = _design(seed=3)

    with pytest.raises(ConvergenceError) as info:
        solve_slope_ls(X, y, np.linspace(15.0, 3.0, 5), SolverOptions(max_iterations=2))

    assert info.value.solution.shape == (5,)
    assert info.value.iterations == 2
    assert info.value.kkt_residual > 1e-8


def test_huber_matches_least_squares_for_large_threshold():

    X, y = _design(seed=4)
    lam = np.linspace(15.0, 3.0, 5)

    ls = solve_slope_ls(X, y, lam).solution
    huber = solve_slope_huber(X, y, lam, k=100.0).solution

    np.testing.assert_allclose(huber, ls, atol=1e-6)

    with pytest.raises(ValueError):
        solve_slope_huber(X, y, lam, k=0.0)


def test_huber_resists_outliers():

    X, y = _design(n=200, seed=5)
    y = y.copy()
    y[:10] += 200.0

    lam = np.zeros(5)

    huber = solve_slope_huber(X, y, lam, k=1.345).solution

    np.testing.assert_allclose(huber[:3], [3.0, -3.0, 1.5], atol=0.5)


def _quantile_lp(X, y, alpha):

    n, p = X.shape

    # Variables: b (free), r+ >= 0, r- >= 0 with y - X b = r+ - r-.
    c = np.r_[np.zeros(p), alpha * np.ones(n), (1.0 - alpha) * np.ones(n)]
    a_eq = np.hstack((X, np.eye(n), -np.eye(n)))
    bounds = [(None, None)] * p + [(0, None)] * (2 * n)

    result = linprog(c, A_eq=a_eq, b_eq=y, bounds=bounds, method='highs')

    return result.fun


def test_quantile_continuation_reaches_the_linear_program():

    X, y = _design(n=40, p=4, seed=6)

    opts = SolverOptions(smoothing_schedule=default_smoothing_schedule(0.1, 1e-4),
                         kkt_tolerance=1e-6)

    for alpha in (0.5, 0.25):

        result = solve_slope_quantile(X, y, np.zeros(4), alpha, opts)

        objective = check_loss(y - X.dot(result.solution), alpha)
        optimum = _quantile_lp(X, y, alpha)

        assert objective >= optimum - 1e-6
        assert objective <= optimum + 0.05

        assert len(result.diagnostics['stages']) == len(opts.smoothing_schedule)
        assert result.diagnostics['objective'] == pytest.approx(objective)


def test_quantile_rejects_bad_levels():

    X, y = _design(n=20, p=4, seed=7)

    with pytest.raises(ValueError):
        solve_slope_quantile(X, y, np.zeros(4), 1.0)


def test_limit_problem_with_identity_is_a_prox():

    lam = [2.0, 1.5, 1.0]
    beta0 = [1.0, 1.0, 0.0]
    w = np.array([3.0, -0.5, 2.0])

    problem = LimitProblem(np.eye(3), w, lam, beta0)

    result = solve_limit_problem(problem)

    np.testing.assert_allclose(result.solution, prox_directional(lam, beta0, w), atol=1e-7)
    assert problem.objective(result.solution) <= problem.objective(result.solution + 1e-3)


def test_limit_problem_scaling():

    # Scaling W and lambda together scales the minimizer and keeps its limiting pattern.
    c = np.array([[1.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 1.0]])
    lam = np.array([2.0, 1.0, 0.5])
    beta0 = np.array([0.0, 1.0, 1.0])

    rng = np.random.default_rng(11)

    for __ in range(50):

        w = 2.0 * rng.standard_normal(3)

        base = solve_limit_problem(LimitProblem(c, w, lam, beta0)).solution

        for gamma in (0.25, 4.0):

            curvature = solve_limit_problem(LimitProblem(gamma * c, w, lam, beta0)).solution
            scaled = solve_limit_problem(LimitProblem(c, w / gamma, lam / gamma, beta0)).solution

            np.testing.assert_allclose(curvature, scaled, atol=1e-6)
            np.testing.assert_allclose(scaled, base / gamma, atol=1e-6)

            assert limiting_pattern(beta0, scaled) == limiting_pattern(beta0, base)


def _central_difference(func, b, h=1e-6):

    out = np.zeros(b.size)

    for i in range(b.size):

        e = np.zeros(b.size)
        e[i] = h

        out[i] = (func(b + e) - func(b - e)) / (2.0 * h)

    return out


def test_loss_gradients_match_finite_differences():

    X, y = _design(n=50, p=4, seed=21)

    rng = np.random.default_rng(22)

    for __ in range(10):

        b = rng.standard_normal(4)

        gradient = -X.T.dot(huber_score(y - X.dot(b), 1.345))
        numeric = _central_difference(lambda v: huber_loss(y - X.dot(v), 1.345), b)

        np.testing.assert_allclose(numeric, gradient, rtol=1e-5, atol=1e-8)

        for alpha in (0.3, 0.5):

            gradient = -X.T.dot(smoothed_check_score(y - X.dot(b), alpha, 0.1))
            numeric = _central_difference(lambda v: smoothed_check_loss(y - X.dot(v), alpha, 0.1), b)

            np.testing.assert_allclose(numeric, gradient, rtol=1e-5, atol=1e-8)


def _snap(v, tol=1e-6):

    """Merges magnitudes closer than tol and zeroes magnitudes below it"""

    v = np.asarray(v, dtype='float64')
    magnitude = np.abs(v)

    order = np.argsort(magnitude)
    snapped = magnitude.copy()

    start = 0

    for position in range(1, v.size + 1):

        if position == v.size or magnitude[order[position]] - magnitude[order[position - 1]] >= tol:

            block = order[start:position]
            snapped[block] = magnitude[block].mean()
            start = position

    snapped[snapped < tol] = 0.0

    return np.sign(v) * snapped


def _face_solution(lam, b, fit):

    """Minimizes over the face of b, where J_lambda(U g) = Lambda_0'U g"""

    u = pattern_matrix(b)
    lam0 = u.T.dot(lambda_zero(lam, b))

    return u, lam0, fit(u, lam0)


def test_least_squares_matches_the_face_optimum():

    X, y = _design(n=20, p=4, seed=23)
    lam = np.array([4.0, 3.0, 2.0, 1.0])

    result = solve_slope_ls(X, y, lam)
    b = _snap(result.solution)

    def fit(u, lam0):

        xu = X.dot(u)

        return np.linalg.solve(xu.T.dot(xu), xu.T.dot(y) - lam0)

    u, __, gamma = _face_solution(lam, b, fit)
    oracle = u.dot(gamma)

    assert pattern(oracle) == pattern(b)
    assert subdiff_membership(SubdifferentialSpec.from_vector(lam, oracle), X.T.dot(y - X.dot(oracle)), tol=1e-8)

    np.testing.assert_allclose(result.solution, oracle, atol=1e-5)


def test_huber_matches_the_face_optimum():

    X, y = _design(n=50, p=4, seed=24)
    y = y.copy()
    y[:3] += 8.0

    k = 1.345
    lam = np.array([6.0, 4.0, 2.0, 1.0])

    result = solve_slope_huber(X, y, lam, k)
    b = _snap(result.solution)

    def fit(u, lam0):

        xu = X.dot(u)
        gamma = np.linalg.lstsq(u, b, rcond=None)[0]

        # Newton on a piecewise quadratic settles once the active set is right.
        for __ in range(50):

            r = y - xu.dot(gamma)
            g = -xu.T.dot(huber_score(r, k)) + lam0

            if np.linalg.norm(g) < 1e-12:
                break

            h = xu.T.dot(xu * (np.abs(r) <= k)[:, np.newaxis])
            gamma = gamma - np.linalg.solve(h, g)

        return gamma

    u, __, gamma = _face_solution(lam, b, fit)
    oracle = u.dot(gamma)

    assert pattern(oracle) == pattern(b)
    assert subdiff_membership(SubdifferentialSpec.from_vector(lam, oracle),
                              X.T.dot(huber_score(y - X.dot(oracle), k)), tol=1e-7)

    np.testing.assert_allclose(result.solution, oracle, atol=1e-5)


def _quantile_slope_lp(X, y, lam, alpha):

    n, p = X.shape

    # Sum of the k largest |b_i| is min_t k t + sum_i (a_i - t)_+, with a >= |b|.
    # Variables: b (p), a (p), t (p), z (p x p, z[i, k]), r+ (n), r- (n).
    weights = lam - np.r_[lam[1:], 0.0]
    sizes = [p, p, p, p * p, n, n]
    offsets = np.cumsum([0] + sizes)

    c = np.zeros(offsets[-1])
    c[offsets[2]:offsets[3]] = weights * np.arange(1, p + 1)
    c[offsets[3]:offsets[4]] = np.tile(weights, p)
    c[offsets[4]:offsets[5]] = alpha
    c[offsets[5]:offsets[6]] = 1.0 - alpha

    rows = list()

    for i in range(p):

        for sign in (1.0, -1.0):

            row = np.zeros(offsets[-1])
            row[offsets[0] + i] = sign
            row[offsets[1] + i] = -1.0
            rows.append(row)

        for k in range(p):

            row = np.zeros(offsets[-1])
            row[offsets[1] + i] = 1.0
            row[offsets[2] + k] = -1.0
            row[offsets[3] + i * p + k] = -1.0
            rows.append(row)

    a_eq = np.zeros((n, offsets[-1]))
    a_eq[:, offsets[0]:offsets[1]] = X
    a_eq[:, offsets[4]:offsets[5]] = np.eye(n)
    a_eq[:, offsets[5]:offsets[6]] = -np.eye(n)

    bounds = [(None, None)] * p + [(0, None)] * p + [(None, None)] * p + [(0, None)] * (p * p + 2 * n)

    result = linprog(c, A_ub=np.array(rows), b_ub=np.zeros(len(rows)), A_eq=a_eq, b_eq=y,
                     bounds=bounds, method='highs')

    return result.x[:p], result.fun


def test_quantile_matches_the_linear_program_with_a_penalty():

    rng = np.random.default_rng(25)

    X = rng.standard_normal((60, 3))
    y = X.dot([2.0, -1.0, 0.0]) + rng.standard_t(3, 60)

    lam = np.array([2.0, 1.0, 0.5])

    result = solve_slope_quantile(X, y, lam, 0.3)
    solution, optimum = _quantile_slope_lp(X, y, lam, 0.3)

    assert result.diagnostics['objective'] == pytest.approx(optimum, abs=1e-4 * max(1.0, abs(optimum)))
    assert slope_norm(lam, solution) + check_loss(y - X.dot(solution), 0.3) == pytest.approx(optimum, rel=1e-6)

    np.testing.assert_allclose(result.solution, solution, atol=1e-3)


def test_quantile_continuation_with_default_options():

    X, y = _design(n=200, p=5, seed=26)
    lam = np.linspace(10.0, 2.0, 5)

    result = solve_slope_quantile(X, y, lam, 0.5)

    stages = result.diagnostics['stages']

    for stage in stages:
        assert stage['kkt_residual'] <= max(1e-8, 10.0 * stage['mu'])

    assert stages[-1]['mu'] <= 1e-6
    assert result.diagnostics['stage_change'] < 1e-5


def test_quantile_median_and_huber_location():

    y = np.array([4.0, -1.0, 2.5, 7.0, 0.5, 3.0, 10.0])
    ones = np.ones((y.size, 1))

    median = solve_slope_quantile(ones, y, [0.0], 0.5).solution

    np.testing.assert_allclose(median, [3.0], atol=1e-5)

    # A symmetric pair inside the quadratic zone is centred at its midpoint.
    for centre in (-2.0, 0.0, 3.5):

        location = solve_slope_huber(np.ones((2, 1)), np.array([-1.0, 1.0]) + centre, [0.0], k=1.345).solution

        np.testing.assert_allclose(location, [centre], atol=1e-7)


def test_limit_problem_optimality():

    c = np.array([[2.0, 0.5, 0.2, 0.0],
                  [0.5, 1.5, 0.3, 0.1],
                  [0.2, 0.3, 1.0, 0.4],
                  [0.0, 0.1, 0.4, 1.2]])

    lam = np.array([2.0, 1.5, 1.0, 0.5])
    beta0 = np.array([1.0, -1.0, 0.0, 2.0])

    rng = np.random.default_rng(27)

    for __ in range(30):

        w = 3.0 * rng.standard_normal(4)

        u = solve_limit_problem(LimitProblem(c, w, lam, beta0)).solution

        subdifferential = SubdifferentialSpec(lam, limiting_pattern(beta0, _snap(u)))

        assert subdiff_membership(subdifferential, w - c.dot(u), tol=1e-5)

    # Without a penalty the minimizer solves C u = W.
    w = rng.standard_normal(4)
    u = solve_limit_problem(LimitProblem(c, w, np.zeros(4), beta0)).solution

    np.testing.assert_allclose(u, np.linalg.solve(c, w), atol=1e-6)

    u = solve_limit_problem(LimitProblem(c, np.zeros(4), lam, np.zeros(4))).solution

    np.testing.assert_allclose(u, np.zeros(4), atol=1e-10)
