import logging
import math
import os
import pathlib
import sys

import structlog

from .exceptions import ConfigError


__all__ = ['configure', 'configure_logging', 'load_key_values',
           'merge_defaults']


IS_CONFIGURED = False
DATA_DIR = pathlib.Path(__file__).resolve().parent / 'data'

LOG_LEVELS = {
    'error': logging.ERROR,
    'info': logging.INFO,
    'debug': logging.DEBUG,
}
LOG_LEVEL = os.environ.get('CONTOUR_RACE_LOG', 'info').lower()

# Full-scale race car magnitudes, SI units
DEFAULT_VEHICLE = {
    'm': 1200.0,
    'Iz': 1500.0,
    'lf': 1.6,
    'lr': 1.6,
    'Bf': 12.0,
    'Cf': 1.4,
    'Df': 9000.0,
    'Br': 12.0,
    'Cr': 1.4,
    'Dr': 9000.0,
    'Cm1': 12000.0,
    'Cm2': 150.0,
    'Croll': 200.0,
    'Cd': 0.9,
    # Slip angles are singular at vx = 0
    'vx_min': 0.1,
}

INF = math.inf

DEFAULT_SOLVER = {
    'N': 35,
    'dt': 0.02,
    'Qc': 0.1,
    'Ql': 100.0,
    'Qtheta': 5.0,
    'R_d': 1.0,
    'R_delta': 10.0,
    'R_theta': 0.001,
    'slack_weight': 1000.0,
    # Largest mode slack, in meters past the violation the car already
    # carries, before the plan counts as infeasible
    'slack_budget': 1.5,
    # Penalty on the slack of the track, obstacle and velocity rows
    'safety_weight': 100000.0,
    'sqp_iters': 3,
    'sqp_step_tol': 1e-3,
    'kkt_tol': 1e-6,
    'qp_max_iter': 60,
    'obstacle_radius': 3.5,
    # Half-width of the car plus a safety margin, kept from the boundary
    'track_margin': 1.0,
    # x, y, phi, vx, vy, omega, d, delta, theta
    'x_lower': [-INF, -INF, -INF, 1.0, -10.0, -3.0, 0.0, -0.4, -INF],
    'x_upper': [INF, INF, INF, 60.0, 10.0, 3.0, 1.0, 0.4, INF],
    # d_dot, delta_dot, theta_dot
    'u_lower': [-10.0, -1.0, 0.0],
    'u_upper': [10.0, 1.0, 60.0],
}

DEFAULT_GRID = {
    # The 16 x 12 x 3 = 576 trial grid, extremal +0.8 and +0.6 dropped
    'lateral': [round(-0.8 + 0.1 * i, 1) for i in range(16)],
    'longitudinal': [round(-0.6 + 0.1 * i, 1) for i in range(12)],
    'speed': [-0.2, 0.0, 0.2],
    # None means corridor traverse time plus 20 percent
    'T_sim': None,
    'ego_speed_factor': 1.0,
    'start_gap': 25.0,
    'box_half_length': 15.0,
    'lookahead': 0.0,
    'max_fallbacks': 10,
    'log_stride': 1,
}

LUT_STEP = 0.25
TRACK_MARGIN = DEFAULT_SOLVER['track_margin']
A_LAT_MAX = 9.0
A_LONG_MAX = 6.0
V_MAX = 30.0
KAPPA_FLOOR = 1e-6

VEHICLE = dict(DEFAULT_VEHICLE)
SOLVER = dict(DEFAULT_SOLVER)
GRID = dict(DEFAULT_GRID)

_LIST_KEYS = {
    'x_lower': 9, 'x_upper': 9, 'u_lower': 3, 'u_upper': 3,
    'lateral': None, 'longitudinal': None, 'speed': None,
}
_INT_KEYS = {'N', 'sqp_iters', 'qp_max_iter', 'max_fallbacks', 'log_stride'}


def _parse_value(key, raw, path):
    items = [item.strip() for item in raw.split(',')]
    try:
        values = [float(item) for item in items if item]
    except ValueError:
        raise ConfigError("{}: invalid value for '{}': {!r}".format(
            path, key, raw))
    if key in _LIST_KEYS:
        expected = _LIST_KEYS[key]
        if expected is not None and len(values) != expected:
            raise ConfigError("{}: '{}' needs {} entries, got {}".format(
                path, key, expected, len(values)))
        return values
    if len(values) != 1:
        raise ConfigError("{}: '{}' takes a single value".format(path, key))
    if key in _INT_KEYS:
        return int(values[0])
    return values[0]


def load_key_values(path, allowed=None):
    """Parse a flat `name = value` configuration file.

    :param path: A path to the file.
    :param allowed: An optional collection of accepted key names.
    :return dict: Parsed values; lists for comma-separated entries.

    :raises ConfigError: If a line is malformed, a key is unknown or
                         repeated, or a value is not a number.
    """
    values = {}
    with open(str(path)) as fp:
        for lineno, line in enumerate(fp, 1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError("{}:{}: expected 'name = value'".format(
                    path, lineno))
            key, raw = (part.strip() for part in line.split('=', 1))
            if allowed is not None and key not in allowed:
                raise ConfigError("{}:{}: unknown key '{}'".format(
                    path, lineno, key))
            if key in values:
                raise ConfigError("{}:{}: duplicate key '{}'".format(
                    path, lineno, key))
            if raw.lower() == 'none':
                values[key] = None
            else:
                values[key] = _parse_value(key, raw, path)
    return values


def merge_defaults(overrides, defaults):
    """Return `defaults` updated with `overrides`, rejecting unknown keys."""
    if not overrides:
        return dict(defaults)
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ConfigError("Unknown configuration keys: {}".format(
            ', '.join(sorted(unknown))))
    merged = dict(defaults)
    merged.update(overrides)
    return merged


def configure(vehicle=None, solver=None, grid=None):
    """Override the default vehicle, solver and grid settings.

    Each argument is a dict of overrides or a path to a key-value file.
    """
    global IS_CONFIGURED, VEHICLE, SOLVER, GRID

    def _load(source, defaults):
        if isinstance(source, (str, pathlib.PurePath)):
            source = load_key_values(source, allowed=defaults)
        return merge_defaults(source, defaults)

    IS_CONFIGURED = True
    if vehicle is not None:
        VEHICLE = _load(vehicle, DEFAULT_VEHICLE)
    if solver is not None:
        SOLVER = _load(solver, DEFAULT_SOLVER)
    if grid is not None:
        GRID = _load(grid, DEFAULT_GRID)


def configure_logging(level=None, stream=None):
    """Route structlog output through the stdlib root logger.

    :param str level: One of `error`, `info`, `debug`; defaults to the
                      `CONTOUR_RACE_LOG` environment variable.
    """
    level = (level or LOG_LEVEL).lower()
    if level not in LOG_LEVELS:
        raise ConfigError(
            "CONTOUR_RACE_LOG must be one of {}, got {!r}".format(
                ', '.join(LOG_LEVELS), level))
    logging.basicConfig(stream=stream or sys.stderr, format='%(message)s')
    logging.getLogger().setLevel(LOG_LEVELS[level])


if not structlog.is_configured():
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt='iso'),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.KeyValueRenderer(key_order=['event']),
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )
