import logging
import sys

import config

formatter = logging.Formatter(
    fmt='%(asctime)s %(levelname)-8s [%(module)s/%(filename)s:%(lineno)d] %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)

# every logger handed out here, so the CLI can change verbosity at once
_registered: dict[str, logging.Logger] = {}


def setup_logger(name: str, log_file: str | None = None,
                 level: int = config.LOG_LEVEL) -> logging.Logger:
    """
    Returns a logger.

    Args:
        name: logger name
        log_file: logging file; standard error is used when `None`
        level: logging level

    Returns:
        New logger, or the existing one when `name` was set up before.
    """
    logger = logging.getLogger(name)
    if name in _registered:
        return logger

    if log_file is None:
        # stdout is reserved for JSON certificates
        handler = logging.StreamHandler(sys.stderr)
    else:
        handler = logging.FileHandler(log_file, delay=True)
    handler.setFormatter(formatter)

    logger.setLevel(level)
    logger.addHandler(handler)
    logger.propagate = False
    _registered[name] = logger

    return logger


def get_local_logger(name: str, level: int = config.LOG_LEVEL) -> logging.Logger:
    """
    Returns a logger for diagnostics (written to standard error)

    Args:
        name: logger name
        level: logging level

    Returns:
        Local logger.
    """
    return setup_logger('local_' + name, None, level)


def get_run_logger(name: str, level: int = logging.INFO) -> logging.Logger:
    """
    Returns a logger recording decisions and verdicts in the run log file

    Args:
        name: logger name
        level: logging level

    Returns:
        Run logger.
    """
    return setup_logger('run_' + name, config.LOG_FILE, level)


def set_verbosity(level: int) -> None:
    """
    Sets the level of all local loggers handed out so far.

    Args:
        level: logging level
    """
    for name, logger in _registered.items():
        if name.startswith('local_'):
            logger.setLevel(level)
