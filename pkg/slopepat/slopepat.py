#!/usr/bin/env python

from __future__ import print_function
from future.utils import viewitems

import os
import sys
import argparse
import time
import copy

from .errors import logger, ConfigError, ConvergenceError, ExperimentError, VertexCapError, \
    UnsupportedLossError
from .core import pattern, limiting_pattern, enumerate_patterns
from .geometry import perturbation_distances
from .solvers import solve_slope_ls, solve_slope_huber, solve_slope_quantile, solve_limit_problem
from .montecarlo import run_finite_sample, run_limiting, recovery_probability, attainability_sweep
from .helpers.sputilities import load_document, parse_config, resolved_document, resolve_threads, write_atomic, \
    format_csv, format_json, write_log, ManageStatus

try:
    import colorama
    from colorama import Fore, Style
except ImportError:
    raise ImportError('Colorama must be installed')


COMMANDS = dict(solve=('regression', 'limit'),
                prox=('prox',),
                pattern=('vector',),
                simulate_fdr=('experiment',),
                simulate_pattern=('experiment',),
                limiting=('model',),
                recovery=('recovery',),
                attainability=('attainability',),
                hausdorff_check=('hausdorff',))

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_IO = 3


class RunParameters(object):

    """
    The run manifest of one command

    Args:
        command (str): One of solve, prox, pattern, simulate-fdr, simulate-pattern,
            limiting, recovery, attainability, hausdorff-check.
        config_path (str): The JSON configuration.
        output_path (str): The result file.
    """

    def __init__(self, command, config_path, output_path):

        self.command = command
        self.config_path = config_path
        self.output_path = output_path

        self._defaults = dict(format='csv',
                              threads=-1,
                              seed=None,
                              overwrite=False)

        # Set the default parameters.
        for k, v in viewitems(self._defaults):
            setattr(self, k, v)

        self.set_params()

    def copy(self):
        return copy.copy(self)

    def set_params(self, **kwargs):

        """
        Sets user-defined parameters
        """

        for k, v in viewitems(kwargs):
            setattr(self, k, v)

        if self.command.replace('-', '_') not in COMMANDS:

            logger.error('  The command must be one of {}.'.format(', '.join(sorted(_command_names()))))
            raise ConfigError('unknown command {}'.format(self.command), field='command')

        if not self.config_path or not self.output_path:

            logger.error('  Both --config and --out must be given.')
            raise ConfigError('paths must be nonempty', field='config_path' if not self.config_path else 'output_path')

        if self.format not in ('csv', 'json'):
            raise ConfigError('must be csv or json', field='format')

        self.f_base = os.path.splitext(self.output_path)[0]

        # The log file.
        self.log_txt = '{}_log.txt'.format(self.f_base)

        # The summary file.
        self.summary_file = '{}.summary.json'.format(self.f_base)

        # The status file.
        self.status_file = '{}.status.yaml'.format(self.output_path)

        return self

    def update_info(self, **kwargs):

        for k, v in viewitems(kwargs):
            setattr(self, k, v)

    def run(self):
        return run(self)


def run_command(command, config_path, output_path, **kwargs):

    parameters = RunParameters(command, config_path, output_path)

    parameters.set_params(**kwargs)

    return parameters.run()


def _command_names():
    return [k.replace('_', '-') for k in COMMANDS]


def _pattern_rows(distribution, label):

    return [dict(kind=label, pattern=str(p), count=c, frequency=c / distribution.total)
            for p, c in distribution.most_common()]


def _vector_rows(values, name='value'):
    return [{'index': i, name: float(v)} for i, v in enumerate(values)]


def _run_solve(request, parameters):

    if hasattr(request, 'problem'):

        result = solve_limit_problem(request.problem, request.solver_opts)
        objective = request.problem.objective(result.solution)

    else:

        if request.loss.kind == 'huber':
            result = solve_slope_huber(request.X, request.y, request.lam, request.loss.k, request.solver_opts)
        elif request.loss.kind == 'quantile':
            result = solve_slope_quantile(request.X, request.y, request.lam, request.loss.alpha, request.solver_opts)
        else:
            result = solve_slope_ls(request.X, request.y, request.lam, request.solver_opts)

        objective = result.objective_trace[-1] if result.objective_trace else None

    metrics = dict(pattern=str(result.pattern()),
                   iterations=result.iterations,
                   kkt_residual=result.kkt_residual,
                   objective=objective)

    return ['index', 'value'], _vector_rows(result.solution), metrics, 'pattern'


def _run_prox(request, parameters):

    solution = request.evaluate()

    return ['index', 'value'], _vector_rows(solution), dict(pattern=str(pattern(solution))), 'pattern'


def _run_pattern(request, parameters):

    p = pattern(request.v)

    rows = [dict(index=i, pattern=int(e)) for i, e in enumerate(p.entries)]
    metrics = dict(pattern=str(p))

    if request.beta0 is not None:

        limit = limiting_pattern(request.beta0, request.v)

        for row, e in zip(rows, limit.entries):
            row['limiting'] = int(e)

        metrics['limiting_pattern'] = str(limit)

        return ['index', 'pattern', 'limiting'], rows, metrics, 'pattern'

    return ['index', 'pattern'], rows, metrics, 'pattern'


def _run_simulate_fdr(config, parameters):

    result = run_finite_sample(config, n_jobs=parameters.threads)

    rows = [dict((k, row[k]) for k in ('rep', 'V', 'R', 'fdr_contrib')) for row in result.table]

    metrics = dict(fdr=result.fdr.fdr_estimate,
                   se=result.fdr.standard_error,
                   power=result.fdr.power_estimate,
                   failures=result.failures)

    if config.lambda_rule['kind'] == 'bhq':
        metrics['q_times_p0_over_p'] = config.lambda_rule['q'] * config.model.null_count / config.model.p
    else:
        metrics['q_times_p0_over_p'] = None

    return ['rep', 'V', 'R', 'fdr_contrib'], rows, metrics, 'fdr'


def _run_simulate_pattern(config, parameters):

    result = run_finite_sample(config, n_jobs=parameters.threads)

    rows = _pattern_rows(result.patterns, 'estimate') + _pattern_rows(result.secondary, 'rescaled')

    top = result.secondary.most_common(1)

    metrics = dict(distinct_estimate=len(result.patterns),
                   distinct_rescaled=len(result.secondary),
                   most_common_rescaled=str(top[0][0]) if top else None,
                   failures=result.failures)

    return ['kind', 'pattern', 'count', 'frequency'], rows, metrics, 'most_common_rescaled'


def _run_limiting(config, parameters):

    result = run_limiting(config.model, config.base_lambda(), config.replications, config.seed,
                          opts=config.solver_opts, n_jobs=parameters.threads)

    rows = _pattern_rows(result.patterns, 'solution') + _pattern_rows(result.secondary, 'limiting')

    metrics = dict(fdr=result.fdr.fdr_estimate,
                   se=result.fdr.standard_error,
                   power=result.fdr.power_estimate,
                   distinct_limiting=len(result.secondary),
                   failures=result.failures)

    return ['kind', 'pattern', 'count', 'frequency'], rows, metrics, 'fdr'


def _run_recovery(request, parameters):

    estimate = recovery_probability(request.lam, request.beta0, request.covariance, request.sigma,
                                    request.replications, request.seed)

    rows = [dict(estimate=estimate.estimate, se=estimate.standard_error, replications=estimate.replications)]

    return ['estimate', 'se', 'replications'], rows, estimate.to_dict(), 'estimate'


def _run_attainability(request, parameters):

    sweep = attainability_sweep(request.lam, request.beta0, request.covariance, request.sigma,
                                request.replications, request.seed,
                                n_jobs=parameters.threads, max_p=request.max_p)

    rows = list()

    for p in enumerate_patterns(request.beta0.size):

        frequency, flag = sweep[p]

        rows.append(dict(pattern=str(p), frequency=frequency, attainable=str(flag).lower()))

    disagreements = sum(1 for frequency, flag in sweep.values() if (frequency > 0) != flag)

    metrics = dict(patterns=len(rows),
                   attainable=sum(1 for __, flag in sweep.values() if flag),
                   disagreements=disagreements)

    return ['pattern', 'frequency', 'attainable'], rows, metrics, 'disagreements'


def _run_hausdorff_check(request, parameters):

    distances = perturbation_distances(request.lam, request.pattern, request.sample_sizes)

    rows = [dict(n=n, d_H=d, bound=b) for n, d, b in distances]

    metrics = dict(max_d_H=max(d for __, d, __ in distances),
                   within_bound=all(d <= b + 1e-9 for __, d, b in distances))

    return ['n', 'd_H', 'bound'], rows, metrics, 'max_d_H'


_HANDLERS = dict(solve=_run_solve,
                 prox=_run_prox,
                 pattern=_run_pattern,
                 simulate_fdr=_run_simulate_fdr,
                 simulate_pattern=_run_simulate_pattern,
                 limiting=_run_limiting,
                 recovery=_run_recovery,
                 attainability=_run_attainability,
                 hausdorff_check=_run_hausdorff_check)


def _read_config(parameters):

    with open(parameters.config_path, 'r') as config_rd:
        text = config_rd.read()

    kinds = COMMANDS[parameters.command.replace('-', '_')]

    document = load_document(text)

    declared = document.get('kind') if isinstance(document, dict) else None
    kind = declared if declared in kinds else kinds[0]

    if declared is not None and declared not in kinds:

        logger.error('  The {} command expects a {} configuration.'.format(parameters.command, ' or '.join(kinds)))
        raise ConfigError('must be {}'.format(' or '.join(kinds)), field='kind')

    return kind, parse_config(document, kind=kind, seed=parameters.seed), \
        resolved_document(document, kind=kind, seed=parameters.seed)


def _emit(parameters, header, rows, metrics, kind, document, runtime):

    seed = document.get('seed')

    if parameters.format == 'json':

        text = format_json(dict(command=parameters.command,
                                seed=seed,
                                config=document,
                                rows=rows))

    else:
        text = format_csv(header, rows, metadata=[('command', parameters.command),
                                                  ('seed', seed),
                                                  ('config', document)])

    write_atomic(parameters.output_path, text)

    write_atomic(parameters.summary_file,
                 format_json(dict(command=parameters.command,
                                  kind=kind,
                                  seed=seed,
                                  config=document,
                                  metrics=metrics,
                                  runtime_seconds=runtime)))


def run(parameters):

    """
    Executes one command and writes its results

    Args:
        parameters (RunParameters)

    Returns:
        int: The exit status (0 success, 1 configuration, 2 solver or experiment, 3 I/O).
    """

    parameters.update_info(threads=resolve_threads(parameters.threads))

    status = ManageStatus(parameters.status_file)

    try:

        status.load_status()

        if status.is_complete(parameters.output_path) and os.path.isfile(parameters.output_path) \
                and not parameters.overwrite:

            logger.info('  {} is already complete. Use --overwrite to rerun.'.format(parameters.output_path))
            return EXIT_OK

        write_log(parameters)

    except (IOError, OSError) as e:

        logger.error('  Could not access the run files: {}'.format(e))
        return EXIT_IO

    start_time = time.time()

    try:

        kind, request, document = _read_config(parameters)

        header, rows, metrics, headline = _HANDLERS[parameters.command.replace('-', '_')](request, parameters)

    except (IOError, OSError) as e:

        logger.error('  Could not read {}: {}'.format(parameters.config_path, e))
        return EXIT_IO

    except ConfigError as e:

        logger.error('  Invalid configuration: {}'.format(e))
        return EXIT_CONFIG

    except (ConvergenceError, ExperimentError, VertexCapError, UnsupportedLossError) as e:

        logger.error('  The {} command failed: {}'.format(parameters.command, e))
        return EXIT_SOLVER

    except ValueError as e:

        logger.error('  Invalid input: {}'.format(e))
        return EXIT_CONFIG

    runtime = time.time() - start_time

    try:

        _emit(parameters, header, rows, metrics, kind, document, runtime)

        status.set_status(parameters.output_path, 'complete')
        status.dump_status()

    except (IOError, OSError) as e:

        logger.error('  Could not write {}: {}'.format(parameters.output_path, e))
        return EXIT_IO

    if parameters.command == 'pattern':
        print(metrics['pattern'])
    else:
        print('{} seed={} {}={}'.format(parameters.command, document.get('seed'), headline, metrics[headline]))

    return EXIT_OK


def _examples():

    sys.exit("""\

    # Print the SLOPE pattern of a vector given as {"kind": "vector", "v": [0, 5, -5, 2.5, 5, 2.5]}.
    slope pattern --config vector.json --out pattern.csv

    # Estimate FDR and power with the BHq penalty at n=500, on 4 threads.
    slope simulate-fdr --config fdr.json --out fdr.csv --threads 4

    # Draw limiting patterns with a different seed, writing JSON.
    slope limiting --config model.json --out limiting.json --format json --seed 7

    # Hausdorff distances of perturbed subdifferentials.
    slope hausdorff-check --config hausdorff.json --out hausdorff.csv

    """)


def _version():

    from . import __version__

    sys.exit(__version__)


def main(argv=None):

    colorama.init()

    parser = argparse.ArgumentParser(description=Fore.GREEN + Style.BRIGHT + 'SLOPE pattern recovery'
                                                 + Style.RESET_ALL,
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    parser.add_argument('command', nargs='?', help='The command to run', default=None,
                        choices=sorted(_command_names()))
    parser.add_argument('-e', '--examples', dest='examples', action='store_true', help='Show usage examples and exit')
    parser.add_argument('-c', '--config', dest='config', help='The JSON configuration', default=None)
    parser.add_argument('-o', '--out', dest='out', help='The output file', default=None)
    parser.add_argument('--format', dest='format', help='The output format', default='csv', choices=['csv', 'json'])
    parser.add_argument('--seed', dest='seed', help='Overrides the configuration seed', default=None, type=int)
    parser.add_argument('--threads', dest='threads',
                        help='The number of parallel replications (SLOPE_THREADS if not given)',
                        default=None, type=int)
    parser.add_argument('--overwrite', dest='overwrite', help='Whether to overwrite completed outputs',
                        action='store_true')
    parser.add_argument('--version', dest='version', help='Whether to show the SlopePat version', action='store_true')

    args = parser.parse_args(argv)

    if args.examples:
        _examples()

    if args.version:
        _version()

    if args.command is None or args.config is None or args.out is None:

        logger.error('  A command, --config and --out are required.')
        sys.exit(EXIT_CONFIG)

    logger.info('\nStart date & time --- (%s)\n' % time.asctime(time.localtime(time.time())))

    start_time = time.time()

    try:

        parameters = RunParameters(args.command, args.config, args.out)

        parameters.set_params(format=args.format,
                              seed=args.seed,
                              threads=args.threads,
                              overwrite=args.overwrite)

    except ConfigError as e:

        logger.error('  {}'.format(e))
        sys.exit(EXIT_CONFIG)

    exit_status = parameters.run()

    logger.info('\nEnd data & time -- (%s)\nTotal processing time -- (%.2gs)\n' %
                (time.asctime(time.localtime(time.time())), (time.time() - start_time)))

    sys.exit(exit_status)


if __name__ == '__main__':
    main()
