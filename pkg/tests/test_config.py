import logging

import pytest

from contourrace import config as contourrace_config
from contourrace.config import (configure, configure_logging,
                                load_key_values, merge_defaults)
from contourrace.dynamics import VehicleParams
from contourrace.exceptions import ConfigError
from contourrace.mpcc import MpccConfig


def test_load_key_values_parses_numbers_lists_and_none(tmp_path):
    path = tmp_path / 'solver.cfg'
    path.write_text('# comment\n'
                    'N = 12  # trailing comment\n'
                    'dt = 0.05\n'
                    '\n'
                    'u_lower = -10, -1, 0\n'
                    'x_upper = inf, inf, inf, 60, 10, 3, 1, 0.4, inf\n'
                    'T_sim = none\n')

    values = load_key_values(path)

    assert values['N'] == 12
    assert isinstance(values['N'], int)
    assert values['dt'] == 0.05
    assert values['u_lower'] == [-10.0, -1.0, 0.0]
    assert values['x_upper'][0] == float('inf')
    assert values['T_sim'] is None


def test_load_key_values_unknown_key(tmp_path):
    path = tmp_path / 'vehicle.cfg'
    path.write_text('m = 1200\nwings = 2\n')

    with pytest.raises(ConfigError) as excinfo:
        load_key_values(path, allowed=contourrace_config.DEFAULT_VEHICLE)

    assert 'wings' in str(excinfo.value)


def test_load_key_values_duplicate_key(tmp_path):
    path = tmp_path / 'vehicle.cfg'
    path.write_text('m = 1200\nm = 1300\n')

    with pytest.raises(ConfigError):
        load_key_values(path)


@pytest.mark.parametrize('line', [
    'u_lower = -10, 0',
    'dt = fast',
    'dt = 0.1, 0.2',
    'no equals sign',
])
def test_load_key_values_malformed(tmp_path, line):
    path = tmp_path / 'solver.cfg'
    path.write_text(line + '\n')

    with pytest.raises(ConfigError):
        load_key_values(path)


def test_merge_defaults_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        merge_defaults({'speed_of_light': 3e8},
                       contourrace_config.DEFAULT_SOLVER)


def test_configure_overrides_only_the_given_section():
    configure(solver={'N': 10})

    assert contourrace_config.SOLVER['N'] == 10
    assert contourrace_config.SOLVER['dt'] == \
        contourrace_config.DEFAULT_SOLVER['dt']
    assert contourrace_config.VEHICLE == contourrace_config.DEFAULT_VEHICLE
    assert contourrace_config.IS_CONFIGURED
    assert MpccConfig.from_config().N == 10


def test_configure_from_files(data_dir):
    configure(vehicle=data_dir / 'vehicle.cfg',
              solver=data_dir / 'solver.cfg', grid=data_dir / 'grid.cfg')

    assert contourrace_config.SOLVER['N'] == 20
    assert contourrace_config.GRID['lateral'] == \
        [-0.75, -0.45, -0.15, 0.15, 0.45, 0.75]
    assert contourrace_config.GRID['T_sim'] is None
    assert contourrace_config.GRID['lookahead'] == 0.0


def test_shipped_vehicle_file_matches_defaults(data_dir):
    assert VehicleParams.from_file(data_dir / 'vehicle.cfg') == \
        VehicleParams(**contourrace_config.DEFAULT_VEHICLE)


def test_shipped_solver_file(data_dir):
    mpcc_config = MpccConfig.from_file(data_dir / 'solver.cfg')

    assert mpcc_config.N == 20
    assert mpcc_config.dt == 0.05
    assert mpcc_config.sqp_iters == 2
    assert list(mpcc_config.u_upper) == [10.0, 1.0, 60.0]
    assert (mpcc_config.x_lower[6], mpcc_config.x_upper[6]) == (0.0, 1.0)
    assert mpcc_config.slack_budget == 1.5
    assert mpcc_config.safety_weight > mpcc_config.slack_weight


@pytest.mark.parametrize('solver', [
    contourrace_config.DEFAULT_SOLVER,
    load_key_values(contourrace_config.DATA_DIR / 'solver.cfg'),
])
def test_drive_command_has_no_brake_range(solver):
    assert solver['x_lower'][6] == 0.0
    assert solver['x_upper'][6] == 1.0


def test_slack_budget_is_narrower_than_the_fixture_track(fixture_track):
    narrowest = min(fixture_track.lut['r'])

    for solver in (contourrace_config.DEFAULT_SOLVER,
                   load_key_values(contourrace_config.DATA_DIR /
                                   'solver.cfg')):
        assert solver['slack_budget'] < narrowest


def test_default_grid_has_576_cells():
    grid = contourrace_config.DEFAULT_GRID

    assert len(grid['lateral']) * len(grid['longitudinal']) * \
        len(grid['speed']) == 576
    assert 0.8 not in grid['lateral']
    assert 0.6 not in grid['longitudinal']


def test_configure_logging_rejects_unknown_level():
    with pytest.raises(ConfigError):
        configure_logging('loud')


def test_configure_logging_sets_root_level():
    root = logging.getLogger()
    level = root.level
    try:
        configure_logging('debug')
        assert root.level == logging.DEBUG
    finally:
        root.setLevel(level)


def test_configure_logging_uses_environment_level(config):
    config.LOG_LEVEL = 'shouting'

    with pytest.raises(ConfigError) as excinfo:
        configure_logging()

    assert 'CONTOUR_RACE_LOG' in str(excinfo.value)
