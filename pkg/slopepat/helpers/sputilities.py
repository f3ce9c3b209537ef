#!/usr/bin/env python

from __future__ import division
from future.utils import viewitems

import os
import io
import csv
import copy
import json
import time
import tempfile

from ..errors import logger, ConfigError
from ..core import CovarianceMatrix, SlopePattern, as_lambda, bhq_lambdas
from ..losses import LossSpec, NoiseSpec, loss_constants
from ..prox import ProxRequest
from ..solvers import SolverOptions, LimitProblem
from ..montecarlo import ModelSpec, ExperimentConfig

import numpy as np

# joblib
try:
    from joblib import cpu_count
except:

    logger.error('joblib must be installed')
    raise ImportError

# YAML
try:
    import yaml
except:

    logger.error('YAML must be installed')
    raise ImportError

# retry
try:
    from retrying import retry
except:

    logger.error('retrying must be installed')
    raise ImportError


CONFIG_KINDS = ('experiment', 'model', 'prox', 'vector', 'regression', 'limit',
                'recovery', 'attainability', 'hausdorff')
SEEDED_KINDS = ('experiment', 'model', 'recovery', 'attainability')


def resolve_threads(threads=None):

    """
    Resolves the number of parallel replications

    Args:
        threads (Optional[int]): The --threads value. SLOPE_THREADS is used when None.

    Returns:
        int
    """

    if threads is None:

        env = os.environ.get('SLOPE_THREADS')

        try:
            threads = int(env) if env else -1
        except ValueError:

            logger.warning('  SLOPE_THREADS={} is not an integer; using all cores.'.format(env))
            threads = -1

    n_cores = cpu_count()

    if threads == 0:
        threads = 1
    elif threads < 0:
        threads = n_cores
    elif threads > n_cores:
        threads = n_cores

    return threads


class _Fields(object):

    """
    Reads one JSON object, tracking the dotted path and unused keys

    Args:
        document (dict)
        path (str): The dotted path of `document`.
    """

    def __init__(self, document, path=''):

        if not isinstance(document, dict):
            raise ConfigError('must be an object', field=path or '<root>')

        self.document = document
        self.path = path
        self.used = set()

    def field(self, key):
        return '{}.{}'.format(self.path, key) if self.path else key

    def has(self, key):
        return key in self.document

    def get(self, key, kind=None, default=None, required=False):

        """
        Args:
            key (str)
            kind (Optional[str]): 'int', 'number', 'bool', 'str', 'vector', 'matrix' or 'object'.
            default (Optional[object])
            required (Optional[bool])
        """

        self.used.add(key)

        if key not in self.document:

            if required:
                raise ConfigError('is required', field=self.field(key))

            return default

        value = self.document[key]

        if kind is None or value is None and not required:
            return value

        return _coerce(value, kind, self.field(key))

    def child(self, key, required=False):

        self.used.add(key)

        if key not in self.document:

            if required:
                raise ConfigError('is required', field=self.field(key))

            return None

        return _Fields(self.document[key], self.field(key))

    def finish(self):

        """Rejects keys that no reader asked for"""

        unknown = sorted(set(self.document) - self.used)

        if unknown:
            raise ConfigError('unknown key', field=self.field(unknown[0]))


def _coerce(value, kind, field):

    if kind == 'int':

        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError('must be an integer', field=field)

        return value

    if kind == 'number':

        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError('must be a number', field=field)

        return float(value)

    if kind == 'bool':

        if not isinstance(value, bool):
            raise ConfigError('must be true or false', field=field)

        return value

    if kind == 'str':

        if not isinstance(value, str):
            raise ConfigError('must be a string', field=field)

        return value

    if kind == 'vector':

        if not isinstance(value, list) or not value or \
                not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError('must be a nonempty list of numbers', field=field)

        return np.array(value, dtype='float64')

    if kind == 'matrix':

        if not isinstance(value, list) or not value or not all(isinstance(row, list) for row in value):
            raise ConfigError('must be a list of rows', field=field)

        rows = [_coerce(row, 'vector', '{}[{:d}]'.format(field, i)) for i, row in enumerate(value)]

        if len(set(row.size for row in rows)) > 1:
            raise ConfigError('rows must have equal lengths', field=field)

        return np.array(rows)

    return value


def _guard(field, func, *args, **kwargs):

    """Calls a constructor, turning its ValueErrors into ConfigErrors at `field`"""

    try:
        return func(*args, **kwargs)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e), field=field)


def _read_noise(reader, alpha=None):

    if reader is None:
        return NoiseSpec.gaussian(1.0)

    kind = reader.get('kind', 'str', default='gaussian')

    if kind == 'gaussian':
        noise = _guard(reader.field('sigma'), NoiseSpec.gaussian, reader.get('sigma', 'number', default=1.0))

    elif kind == 'student_t':

        noise = _guard(reader.field('df'), NoiseSpec.student_t,
                       reader.get('df', 'number', required=True),
                       reader.get('scale', 'number', default=1.0))

    elif kind == 'shifted':

        base = _read_noise(reader.child('base', required=True))
        noise = NoiseSpec.shifted(base, reader.get('shift', 'number', default=0.0))

    elif kind == 'quantile_shifted':

        base = _read_noise(reader.child('base', required=True))
        level = reader.get('alpha', 'number', default=alpha)

        if level is None:
            raise ConfigError('is required unless the loss is quantile', field=reader.field('alpha'))

        noise = _guard(reader.field('alpha'), NoiseSpec.quantile_shifted, base, level)

    elif kind == 'none':
        noise = None

    else:
        raise ConfigError('unknown noise kind {}'.format(kind), field=reader.field('kind'))

    reader.finish()

    return noise


def _read_loss(reader):

    if reader is None:
        return LossSpec.quadratic()

    kind = reader.get('kind', 'str', default='quadratic')

    if kind == 'huber':
        loss = _guard(reader.field('k'), LossSpec.huber, reader.get('k', 'number', required=True))
    elif kind == 'quantile':
        loss = _guard(reader.field('alpha'), LossSpec.quantile, reader.get('alpha', 'number', required=True))
    elif kind == 'quadratic':
        loss = LossSpec.quadratic()
    else:
        raise ConfigError('unknown loss kind {}'.format(kind), field=reader.field('kind'))

    reader.finish()

    return loss


def _read_covariance(reader, key, p, support=None):

    """
    Reads a covariance: omitted or "identity", a full matrix, or
    {"support_block": [[...]]} for I on the zeros of beta0 and the block on its support
    """

    value = reader.document.get(key)
    field = reader.field(key)

    if value is None or value == 'identity':

        reader.used.add(key)

        return CovarianceMatrix.identity(p)

    if isinstance(value, dict):

        sub = reader.child(key)
        block = sub.get('support_block', 'matrix', required=True)
        sub.finish()

        if support is None:
            raise ConfigError('support_block needs beta0', field=field)

        return _guard(field, CovarianceMatrix.block_diagonal, p, support, block)

    matrix = reader.get(key, 'matrix')

    if matrix.shape != (p, p):
        raise ConfigError('must be {:d} x {:d}'.format(p, p), field=field)

    return _guard(field, CovarianceMatrix, matrix)


def _read_model(reader):

    beta0 = reader.get('beta0', 'vector', required=True)
    support = list(np.flatnonzero(beta0))

    covariance = _read_covariance(reader, 'covariance', beta0.size, support=support)
    loss = _read_loss(reader.child('loss'))
    noise = _read_noise(reader.child('noise'), alpha=loss.alpha)

    reader.finish()

    return _guard(reader.path or 'model', ModelSpec, beta0, covariance, noise, loss)


def _read_solver(reader):

    if reader is None:
        return SolverOptions()

    kwargs = dict()

    for key in sorted(reader.document):

        if key not in SolverOptions._defaults:
            raise ConfigError('unknown key', field=reader.field(key))

        kwargs[key] = reader.get(key)

    reader.finish()

    return _guard(reader.path, SolverOptions, **kwargs)


def _read_lambda_rule(reader, model):

    """
    Reads "lambda" (explicit values) or "bhq" ({"q", "scale"}); scale "auto"
    is sqrt(delta) of the model's loss and noise
    """

    if reader.has('lambda') and reader.has('bhq'):
        raise ConfigError('give either lambda or bhq, not both', field=reader.field('lambda'))

    if reader.has('lambda'):

        values = reader.get('lambda', 'vector')
        _guard(reader.field('lambda'), as_lambda, values)

        return {'kind': 'explicit', 'values': values.tolist()}

    sub = reader.child('bhq', required=True)

    q = sub.get('q', 'number', required=True)
    scale = sub.get('scale', default='auto')

    sub.finish()

    if scale == 'auto':
        scale = float(np.sqrt(model.constants().delta)) if model.noise is not None else 1.0
    else:
        scale = _coerce(scale, 'number', sub.field('scale'))

    _guard(sub.field('q'), bhq_lambdas, model.p, q, scale)

    return {'kind': 'bhq', 'q': q, 'scale': scale}


class LimitingConfig(object):

    """
    A limiting-sampler campaign

    Args:
        model (ModelSpec)
        lambda_rule (dict)
        replications (int)
        seed (int)
        solver_opts (SolverOptions)
    """

    def __init__(self, model, lambda_rule, replications, seed, solver_opts):

        self.model = model
        self.lambda_rule = lambda_rule
        self.replications = replications
        self.seed = seed
        self.solver_opts = solver_opts

    def base_lambda(self):

        if self.lambda_rule['kind'] == 'bhq':
            return bhq_lambdas(self.model.p, self.lambda_rule['q'], scale=self.lambda_rule['scale'])

        return as_lambda(self.lambda_rule['values'])


class RegressionRequest(object):

    """
    A single SLOPE fit on given data

    Args:
        X (2d array)
        y (1d array)
        lam (LambdaVector)
        loss (LossSpec)
        solver_opts (SolverOptions)
    """

    def __init__(self, X, y, lam, loss, solver_opts):

        self.X = X
        self.y = y
        self.lam = lam
        self.loss = loss
        self.solver_opts = solver_opts


class ExperimentRequest(object):

    """
    A recovery, attainability or Hausdorff request: a plain attribute holder
    """

    def __init__(self, kind, **kwargs):

        self.kind = kind

        for k, v in viewitems(kwargs):
            setattr(self, k, v)


def _read_experiment(reader):

    model = _read_model(reader.child('model', required=True))
    rule = _read_lambda_rule(reader, model)

    n = reader.get('n', 'int', required=True)
    replications = reader.get('replications', 'int', required=True)
    seed = reader.get('seed', 'int', default=0)
    opts = _read_solver(reader.child('solver'))

    if n < model.p:
        raise ConfigError('must be at least p = {:d}'.format(model.p), field=reader.field('n'))

    if replications < 1:
        raise ConfigError('must be at least 1', field=reader.field('replications'))

    if rule['kind'] == 'explicit' and len(rule['values']) != model.p:
        raise ConfigError('must have one entry per coefficient', field=reader.field('lambda'))

    return ExperimentConfig(model, n, replications, rule, seed, solver_opts=opts)


def _read_limiting(reader):

    model = _read_model(reader.child('model', required=True))
    rule = _read_lambda_rule(reader, model)

    replications = reader.get('replications', 'int', required=True)

    if replications < 1:
        raise ConfigError('must be at least 1', field=reader.field('replications'))

    if rule['kind'] == 'explicit' and len(rule['values']) != model.p:
        raise ConfigError('must have one entry per coefficient', field=reader.field('lambda'))

    return LimitingConfig(model, rule, replications,
                          reader.get('seed', 'int', default=0),
                          _read_solver(reader.child('solver')))


def _read_prox(reader):

    lam = reader.get('lambda', 'vector', required=True)
    lam = _guard(reader.field('lambda'), as_lambda, lam)

    return _guard(reader.field('y'), ProxRequest, lam,
                  reader.get('y', 'vector', required=True),
                  anchor=reader.get('anchor', 'vector'),
                  step=reader.get('step', 'number', default=1.0))


def _read_regression(reader):

    X = reader.get('X', 'matrix', required=True)
    y = reader.get('y', 'vector', required=True)

    if X.shape[0] != y.size:
        raise ConfigError('X has {:d} rows but y has {:d} entries'.format(X.shape[0], y.size), field=reader.field('y'))

    lam = _guard(reader.field('lambda'), as_lambda, reader.get('lambda', 'vector', required=True))

    if lam.p != X.shape[1]:
        raise ConfigError('must have one entry per column of X', field=reader.field('lambda'))

    return RegressionRequest(X, y, lam, _read_loss(reader.child('loss')), _read_solver(reader.child('solver')))


def _read_limit(reader):

    lam = _guard(reader.field('lambda'), as_lambda, reader.get('lambda', 'vector', required=True))
    w = reader.get('W', 'vector', required=True)
    beta0 = reader.get('beta0', 'vector', default=np.zeros(w.size))

    c_tilde = _read_covariance(reader, 'C_tilde', w.size)

    problem = _guard(reader.field('W'), LimitProblem, c_tilde, w, lam, beta0)

    return ExperimentRequest('limit', problem=problem, solver_opts=_read_solver(reader.child('solver')))


def _read_orthant(reader, kind):

    beta0 = reader.get('beta0', 'vector', required=True)
    lam = _guard(reader.field('lambda'), as_lambda, reader.get('lambda', 'vector', required=True))

    if lam.p != beta0.size:
        raise ConfigError('must have one entry per coefficient', field=reader.field('lambda'))

    covariance = _read_covariance(reader, 'covariance', beta0.size, support=list(np.flatnonzero(beta0)))

    sigma = reader.get('sigma', 'number', default=1.0)

    if not sigma > 0:
        raise ConfigError('must be positive', field=reader.field('sigma'))

    replications = reader.get('replications', 'int', required=True)

    if replications < 1:
        raise ConfigError('must be at least 1', field=reader.field('replications'))

    kwargs = dict(lam=lam, beta0=beta0, covariance=covariance, sigma=sigma,
                  replications=replications, seed=reader.get('seed', 'int', default=0))

    if kind == 'attainability':
        kwargs['max_p'] = reader.get('max_p', 'int', default=4)

    return ExperimentRequest(kind, **kwargs)


def _read_hausdorff(reader):

    lam = _guard(reader.field('lambda'), as_lambda, reader.get('lambda', 'vector', required=True))

    entries = reader.get('pattern', default=[0] * lam.p)

    if not isinstance(entries, list) or not all(isinstance(e, int) and not isinstance(e, bool) for e in entries):
        raise ConfigError('must be a list of integers', field=reader.field('pattern'))

    if len(entries) != lam.p:
        raise ConfigError('must have one entry per lambda', field=reader.field('pattern'))

    p = _guard(reader.field('pattern'), SlopePattern, entries)

    sizes = reader.get('sample_sizes', default=[1, 10, 100])

    if not isinstance(sizes, list) or not sizes or \
            not all(isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in sizes):
        raise ConfigError('must be a nonempty list of positive integers', field=reader.field('sample_sizes'))

    return ExperimentRequest('hausdorff', lam=lam, pattern=p, sample_sizes=sizes)


def _read_vector(reader):

    v = reader.get('v', 'vector', required=True)
    beta0 = reader.get('beta0', 'vector')

    if beta0 is not None and beta0.size != v.size:
        raise ConfigError('must have the length of v', field=reader.field('beta0'))

    return ExperimentRequest('vector', v=v, beta0=beta0)


_READERS = dict(experiment=_read_experiment,
                model=_read_limiting,
                prox=_read_prox,
                vector=_read_vector,
                regression=_read_regression,
                limit=_read_limit,
                recovery=lambda reader: _read_orthant(reader, 'recovery'),
                attainability=lambda reader: _read_orthant(reader, 'attainability'),
                hausdorff=_read_hausdorff)


def load_document(text):

    """
    Parses JSON text

    Raises:
        ConfigError: with the character position of a syntax error
    """

    try:
        return json.loads(text)
    except ValueError as e:

        position = getattr(e, 'pos', None)

        logger.error('  The configuration is not valid JSON ({}).'.format(e))
        raise ConfigError('invalid JSON: {}'.format(e), position=position)


def parse_config(text, kind=None, seed=None):

    """
    Parses and validates a JSON configuration

    Args:
        text (str or dict): The JSON document, or an already-decoded object.
        kind (Optional[str]): Forces a schema; otherwise the document's "kind" key.
        seed (Optional[int]): Overrides the document's seed.

    Returns:
        ExperimentConfig, LimitingConfig, ProxRequest, RegressionRequest or ExperimentRequest
    """

    document = load_document(text) if not isinstance(text, dict) else copy.deepcopy(text)

    reader = _Fields(document)

    declared = reader.get('kind', 'str')
    kind = kind or declared

    if kind is None:
        raise ConfigError('is required', field='kind')

    if kind not in _READERS:
        raise ConfigError('must be one of {}'.format(', '.join(CONFIG_KINDS)), field='kind')

    if seed is not None and kind in SEEDED_KINDS:
        document['seed'] = int(seed)

    parsed = _READERS[kind](reader)

    reader.finish()

    return parsed


def resolved_document(text, kind=None, seed=None):

    """The decoded configuration with the effective seed written in"""

    document = load_document(text) if not isinstance(text, dict) else copy.deepcopy(text)

    if (kind or document.get('kind')) in SEEDED_KINDS:

        if seed is not None:
            document['seed'] = int(seed)
        else:
            document.setdefault('seed', 0)

    return document


@retry(stop_max_attempt_number=5, wait_fixed=200, retry_on_exception=lambda e: isinstance(e, OSError))
def _replace(source, destination):
    os.replace(source, destination)


def write_atomic(path, text):

    """
    Writes text to a temporary file beside `path`, then renames it over `path`

    Args:
        path (str)
        text (str)
    """

    d_name = os.path.dirname(os.path.abspath(path))

    handle, temporary = tempfile.mkstemp(prefix='.tmp_', dir=d_name)

    try:

        with io.open(handle, 'w', encoding='utf-8', newline='') as tmp_wr:
            tmp_wr.write(text)

        _replace(temporary, path)

    except:

        if os.path.isfile(temporary):
            os.remove(temporary)

        raise


def format_csv(header, rows, metadata=None):

    """
    RFC 4180 text with LF line endings

    Args:
        header (list of str)
        rows (list of dict)
        metadata (Optional[list]): (key, value) pairs written first as `# key=value` comment lines.
            Values that are not strings are written as compact JSON.
    """

    buffer = io.StringIO()

    for key, value in (metadata or list()):

        if not isinstance(value, str):
            value = json.dumps(value, sort_keys=True, separators=(',', ':'))

        buffer.write('# {}={}\n'.format(key, value))

    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)

    for row in rows:
        writer.writerow([_csv_value(row[h]) for h in header])

    return buffer.getvalue()


def _csv_value(value):

    if isinstance(value, float):
        return repr(value)

    return str(value)


def format_json(document):
    return json.dumps(document, indent=2, sort_keys=True) + '\n'


def write_log(parameter_object):

    """
    Appends the run parameters to the text log

    Args:
        parameter_object (class)
    """

    if os.path.isfile(parameter_object.log_txt):

        with open(parameter_object.log_txt, 'r') as log_txt_wr:
            starter = log_txt_wr.readlines()

    else:
        starter = list()

    lines2write = starter + ['\n',
                             '=================================================\n',
                             'Start date & time --- ({})\n'.format(time.asctime(time.localtime(time.time()))),
                             '=================================================\n',
                             'Command: {}\n'.format(parameter_object.command),
                             'Configuration: {}\n'.format(parameter_object.config_path),
                             'Output: {}\n'.format(parameter_object.output_path),
                             'Format: {}\n'.format(parameter_object.format),
                             'Seed: {}\n'.format(parameter_object.seed),
                             'Threads: {:d}\n'.format(parameter_object.threads)]

    with open(parameter_object.log_txt, 'w') as log_txt_wr:
        log_txt_wr.writelines(lines2write)


def _retry_if_not_dict(result):
    return not isinstance(result, dict)


class ManageStatus(object):

    """
    Tracks output completion in a YAML status file

    Args:
        status_file (str)
    """

    def __init__(self, status_file):

        self.status_file = status_file
        self.status_dict = dict()

    def copy(self):
        return copy.copy(self)

    def load_status(self):

        """Loads the status from file, starting empty if there is none"""

        if os.path.isfile(self.status_file):
            self.status_dict = self._load_status(self.status_file)
        else:
            self.status_dict = dict()

    @staticmethod
    @retry(wait_fixed=500, retry_on_result=_retry_if_not_dict, stop_max_attempt_number=10)
    def _load_status(status2load):

        with open(status2load, 'r') as pf:
            loaded = yaml.safe_load(pf)

        return loaded if loaded is not None else dict()

    def is_complete(self, key):
        return self.status_dict.get(key) == 'complete'

    def set_status(self, key, status):
        self.status_dict[key] = status

    def dump_status(self):

        """Dumps the status to file"""

        write_atomic(self.status_file, yaml.safe_dump(self.status_dict, default_flow_style=False))
