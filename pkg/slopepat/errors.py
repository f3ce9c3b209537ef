import os
import logging

from .paths import get_log_dir


_FORMAT = '%(asctime)s:%(levelname)s:%(lineno)s:%(module)s.%(funcName)s:%(message)s'
_formatter = logging.Formatter(_FORMAT, '%H:%M:%S')
_handler = logging.StreamHandler()
_handler.setFormatter(_formatter)

try:

    logging.basicConfig(filename=os.path.join(get_log_dir(), 'slopepat.log'),
                        filemode='w',
                        level=logging.DEBUG)

except (IOError, OSError):
    pass

logger = logging.getLogger(__name__)
logger.addHandler(_handler)
logger.setLevel(logging.INFO)


class DimensionError(ValueError):
    """Raised when vector or matrix dimensions do not agree"""


class InvalidLambdaError(ValueError):
    """Raised when a penalty sequence is not nonincreasing and nonnegative"""


class InvalidPatternError(ValueError):
    """Raised when pattern ranks are not consecutive"""


class NotPositiveDefiniteError(ValueError):
    """Raised when a covariance matrix is not symmetric positive definite"""


class VertexCapError(OverflowError):
    """Raised when a subdifferential has more vertices than the cap allows"""


class UnsupportedLossError(ValueError):
    """Raised for loss and noise combinations without limiting constants"""


class ConvergenceError(ArithmeticError):

    """
    Raised when a solver stops before the KKT tolerance is met

    Args:
        message (str)
        solution (1d array): The last iterate.
        kkt_residual (float)
        iterations (int)
    """

    def __init__(self, message, solution=None, kkt_residual=None, iterations=None):

        super(ConvergenceError, self).__init__(message)

        self.solution = solution
        self.kkt_residual = kkt_residual
        self.iterations = iterations


class ConfigError(ValueError):

    """
    Raised when a configuration document is invalid

    Args:
        message (str)
        field (Optional[str]): The dotted path of the offending field.
        position (Optional[int]): The character offset of a JSON syntax error.
    """

    def __init__(self, message, field=None, position=None):

        if field is not None:
            message = '{}: {}'.format(field, message)

        super(ConfigError, self).__init__(message)

        self.field = field
        self.position = position


class ExperimentError(RuntimeError):
    """Raised when too many replications of a campaign fail"""
