import logging
import os

import pytest

from contourrace import config as contourrace_config
from contourrace.config import load_key_values
from contourrace.dynamics import VehicleParams
from contourrace.experiments import DoeGrid, run_doe
from contourrace.mpcc import MpccConfig
from contourrace.opponent import fallback_speed_profile
from contourrace.track import build_track, load_portions_csv, load_track_csv

from .utils import circle_waypoints


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help="Run the long closed-loop experiments too")


def pytest_configure(config):
    config.addinivalue_line('markers',
                            'slow: long closed-loop experiment runs')


def pytest_collection_modifyitems(config, items):
    if config.getoption('runslow'):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope='session')
def data_dir():
    return contourrace_config.DATA_DIR


@pytest.fixture(scope='session')
def params():
    return VehicleParams(**contourrace_config.DEFAULT_VEHICLE)


@pytest.fixture(scope='session')
def circle_track():
    waypoints = circle_waypoints(50.0, 120)
    return build_track(waypoints, [7.0] * len(waypoints))


@pytest.fixture(scope='session')
def fixture_track(data_dir):
    waypoints, widths = load_track_csv(data_dir / 'track.csv')
    return build_track(waypoints, widths)


@pytest.fixture(scope='session')
def fixture_portions(data_dir):
    return load_portions_csv(data_dir / 'portions.csv')


@pytest.fixture(scope='session')
def fixture_raceline(fixture_track):
    return fallback_speed_profile(fixture_track)


@pytest.fixture(scope='session')
def small_config():
    """A short horizon that keeps closed-loop tests fast."""
    return MpccConfig(**dict(contourrace_config.DEFAULT_SOLVER, N=10,
                             dt=0.05, sqp_iters=2))


@pytest.fixture(scope='session')
def shipped_solver(data_dir):
    return MpccConfig.from_file(data_dir / 'solver.cfg')


@pytest.fixture(scope='session')
def reduced_grid(data_dir):
    values = load_key_values(data_dir / 'grid.cfg',
                             allowed=contourrace_config.DEFAULT_GRID)
    return DoeGrid(values['lateral'], values['longitudinal'],
                   values['speed'])


@pytest.fixture(scope='session')
def reduced_doe(fixture_track, fixture_raceline, fixture_portions, params,
                shipped_solver, reduced_grid):
    """The shipped 6 x 4 x 3 grid on every fixture portion."""
    return run_doe(fixture_track, fixture_raceline, fixture_portions,
                   reduced_grid, params, shipped_solver,
                   jobs=os.cpu_count() or 1)


@pytest.fixture(autouse=True)
def configure_pytest_logging(caplog):
    caplog.set_level(logging.INFO)


@pytest.fixture(autouse=True)
def restore_settings():
    """`configure()` rebinds the module settings; put them back."""
    saved = {name: getattr(contourrace_config, name)
             for name in ('VEHICLE', 'SOLVER', 'GRID', 'IS_CONFIGURED')}
    yield
    for name, value in saved.items():
        setattr(contourrace_config, name, value)


# noinspection PyUnresolvedReferences
class ConfigWrapper:
    def __init__(self):
        self.__dict__['_orig_attrs'] = {}

    def __setattr__(self, attr, value):
        # Do not override the original value if already saved
        if attr not in self._orig_attrs:
            self._orig_attrs[attr] = getattr(contourrace_config, attr)
        setattr(contourrace_config, attr, value)

    def restore(self):
        for attr, value in self._orig_attrs.items():
            setattr(contourrace_config, attr, value)


@pytest.fixture
def config():
    """A fixture to override the config attributes which restores changes after
    the test run."""

    wrapper = ConfigWrapper()
    yield wrapper
    wrapper.restore()
