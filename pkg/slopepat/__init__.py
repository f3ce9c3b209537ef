from .slopepat import run_command
from .test_slopepat import test_patterns

from .core import LambdaVector, SlopePattern, ClusterPartition, CovarianceMatrix, \
    slope_norm, pattern, clusters, limiting_pattern, directional_derivative, bhq_lambdas
from .prox import ProxRequest, prox_slope, prox_directional
from .geometry import SubdifferentialSpec, subdiff_vertices, subdiff_membership, dual_ball_membership, \
    hausdorff_distance, attainable
from .losses import LossSpec, NoiseSpec, loss_constants
from .solvers import SolverOptions, LimitProblem, solve_slope_ls, solve_slope_huber, solve_slope_quantile, \
    solve_limit_problem
from .montecarlo import ModelSpec, ExperimentConfig, run_finite_sample, run_limiting, recovery_probability, \
    compare_distributions, attainability_sweep

from .version import __version__


__all__ = ['run_command',
           'test_patterns',
           'LambdaVector',
           'SlopePattern',
           'ClusterPartition',
           'CovarianceMatrix',
           'slope_norm',
           'pattern',
           'clusters',
           'limiting_pattern',
           'directional_derivative',
           'bhq_lambdas',
           'ProxRequest',
           'prox_slope',
           'prox_directional',
           'SubdifferentialSpec',
           'subdiff_vertices',
           'subdiff_membership',
           'dual_ball_membership',
           'hausdorff_distance',
           'attainable',
           'LossSpec',
           'NoiseSpec',
           'loss_constants',
           'SolverOptions',
           'LimitProblem',
           'solve_slope_ls',
           'solve_slope_huber',
           'solve_slope_quantile',
           'solve_limit_problem',
           'ModelSpec',
           'ExperimentConfig',
           'run_finite_sample',
           'run_limiting',
           'recovery_probability',
           'compare_distributions',
           'attainability_sweep',
           '__version__']
