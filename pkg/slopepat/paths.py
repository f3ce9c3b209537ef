import os


def get_path():
    return os.path.dirname(os.path.realpath(__file__))


def get_log_dir():

    """
    The directory of the package file log

    SLOPE_LOG_DIR overrides the package directory.
    """

    log_dir = os.environ.get('SLOPE_LOG_DIR', '').strip()

    if log_dir:
        return os.path.realpath(os.path.expanduser(log_dir))

    return get_path()
