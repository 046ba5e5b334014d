import json

import numpy as np
import pytest

from contourrace.config import DEFAULT_GRID
from contourrace.exceptions import PolicyError
from contourrace.experiments import (DoeGrid, InitialCondition, PolicyMap,
                                     TrialRecord, check_overtake,
                                     generate_initial_conditions,
                                     learn_policy, load_policy, read_records,
                                     run_doe, run_lap, run_trial, save_policy,
                                     speed_summary, write_probability_table,
                                     write_records, write_speed_summary)
from contourrace.mpcc import Mode
from contourrace.opponent import obstacle_at
from contourrace.track import PortionSpec, Region, lookup, region_of
from contourrace.utils import read_csv

from .utils import make_record, state_on_track

#: Every cell starts outside the drivable band, so no trial is simulated.
OFF_TRACK_GRID = DoeGrid([-0.95, 0.95], [0.0], [0.0, 0.2])


@pytest.fixture
def straight(fixture_portions):
    return fixture_portions[0]


def test_doe_grid_default_size():
    grid = DoeGrid(DEFAULT_GRID['lateral'], DEFAULT_GRID['longitudinal'],
                   DEFAULT_GRID['speed'])

    assert len(grid) == 576
    assert len(grid.cells()) == 576
    assert grid.cells()[0] == (0, -0.8, -0.6, -0.2)
    assert grid.cells()[1] == (1, -0.8, -0.6, 0.0)
    assert grid.cells()[-1] == (575, 0.7, 0.5, 0.2)


@pytest.mark.parametrize('lateral, longitudinal, speed', [
    ([1.0], [0.0], [0.0]),
    ([0.0], [-1.2], [0.0]),
    ([0.0], [0.0], [-1.0]),
    ([], [0.0], [0.0]),
])
def test_doe_grid_rejects_bad_axes(lateral, longitudinal, speed):
    with pytest.raises(ValueError):
        DoeGrid(lateral, longitudinal, speed)


def test_doe_grid_empty():
    grid = DoeGrid.empty()

    assert len(grid) == 0
    assert grid.cells() == []


def test_generate_initial_conditions(fixture_track, fixture_raceline,
                                     straight, params):
    grid = DoeGrid([-0.5, 0.5], [-0.6, 0.6], [0.0, 0.2])

    conditions = generate_initial_conditions(straight, grid, fixture_track,
                                             fixture_raceline, params)

    assert [init.index for init in conditions] == list(range(8))
    for init, (index, lateral, longitudinal, scale) in zip(conditions,
                                                           grid.cells()):
        ego = init.ego
        assert init.valid
        assert init.speed_scale == scale
        assert ego.theta == pytest.approx(
            straight.anchor + longitudinal * straight.box_half_length)
        assert ego.y == pytest.approx(lateral * 7.0, abs=1e-3)
        assert ego.phi == pytest.approx(0.0, abs=1e-3)
        assert init.obstacle.s == pytest.approx(straight.span[0], abs=1e-3)
        assert init.obstacle.x == pytest.approx(straight.span[0], abs=1e-2)
        assert init.region is region_of(fixture_track, straight, ego.x, ego.y)
    baseline = fixture_raceline.interpolate(straight.span[0])[3]
    assert conditions[0].ego.vx == pytest.approx(baseline)
    assert conditions[1].obstacle.v == pytest.approx(1.2 * baseline)


def test_generate_initial_conditions_marks_off_track_starts(
        fixture_track, fixture_raceline, straight, params):
    conditions = generate_initial_conditions(
        straight, OFF_TRACK_GRID, fixture_track, fixture_raceline, params)

    assert len(conditions) == 4
    assert not any(init.valid for init in conditions)
    assert all('drivable band' in init.reason for init in conditions)


def test_check_overtake_ahead_in_corridor(fixture_track, fixture_raceline):
    obstacle = obstacle_at(fixture_raceline, 190.0)

    ahead = state_on_track(fixture_track, 200.0)
    behind = state_on_track(fixture_track, 180.0, offset=2.0)

    assert check_overtake(ahead, obstacle, fixture_track, (120.0, 300.0))
    assert not check_overtake(behind, obstacle, fixture_track,
                              (120.0, 300.0))


def test_check_overtake_obstacle_beyond_corridor(fixture_track,
                                                 fixture_raceline):
    obstacle = obstacle_at(fixture_raceline, 310.0)
    ego = state_on_track(fixture_track, 320.0)

    assert not check_overtake(ego, obstacle, fixture_track, (120.0, 300.0))


def test_check_overtake_across_the_seam(fixture_track, fixture_raceline):
    length = fixture_track.length
    corridor = (length - 20.0, 30.0)
    obstacle = obstacle_at(fixture_raceline, length - 5.0)

    assert check_overtake(state_on_track(fixture_track, 3.0), obstacle,
                          fixture_track, corridor)
    assert not check_overtake(state_on_track(fixture_track, length - 10.0),
                              obstacle, fixture_track, corridor)


def test_learn_policy_probabilities():
    records = (
        [make_record(region=Region.R1, overtake=i < 2, index=i)
         for i in range(5)] +
        [make_record(region=Region.R2, overtake=i < 1, index=10 + i)
         for i in range(4)] +
        [make_record(region=Region.R4, index=20 + i) for i in range(2)] +
        [make_record(region=Region.R3, failed=True, index=30),
         make_record(region=Region.R3, valid=False, index=31)]
    )

    policy = learn_policy(records)

    entry = policy.entries[1]
    probabilities = entry.probabilities
    assert probabilities[Region.R1] == pytest.approx(0.4)
    assert probabilities[Region.R2] == pytest.approx(0.25)
    assert probabilities[Region.R3] is None
    assert probabilities[Region.R4] == 0.0
    assert entry.failed[Region.R3] == 1
    assert entry.totals[Region.R3] == 0
    assert entry.chosen is Region.R1
    assert policy.region_for(1) is Region.R1
    assert policy.region_for(7) is None


def test_learn_policy_ties_go_to_the_lowest_region():
    records = [
        make_record(region=Region.R4, overtake=True, index=0),
        make_record(region=Region.R4, index=1),
        make_record(region=Region.R2, overtake=True, index=2),
        make_record(region=Region.R2, index=3),
    ]

    assert learn_policy(records).region_for(1) is Region.R2


def test_learn_policy_unlearnable_portion(caplog):
    records = [make_record(tau=2, failed=True, index=i) for i in range(3)]

    policy = learn_policy(records)

    assert not policy.entries[2].learnable
    assert policy.region_for(2) is None
    assert 'Portion has no usable trials' in caplog.text


def test_learn_policy_keeps_portions_apart():
    records = [make_record(tau=1, region=Region.R3, overtake=True),
               make_record(tau=3, region=Region.R2, overtake=True,
                           kind='chicane')]

    policy = learn_policy(records)

    assert sorted(policy.entries) == [1, 3]
    assert policy.region_for(1) is Region.R3
    assert policy.region_for(3) is Region.R2
    assert policy.entries[3].kind == 'chicane'


@pytest.mark.parametrize('overtakes, expected, chosen', [
    ((41, 38, 25, 21), [0.41, 0.38, 0.25, 0.21], Region.R1),
    ((12, 30, 30, 8), [0.12, 0.3, 0.3, 0.08], Region.R2),
    ((5, 9, 14, 11), [0.05, 0.09, 0.14, 0.11], Region.R3),
])
def test_learn_policy_from_hundred_trials_per_region(overtakes, expected,
                                                     chosen):
    records = [make_record(tau=4, kind='hairpin', region=region,
                           overtake=i < count, index=100 * number + i)
               for number, (region, count) in enumerate(
                   zip(Region, overtakes))
               for i in range(100)]

    entry = learn_policy(records).entries[4]

    assert [entry.probabilities[region] for region in Region] == expected
    assert entry.chosen is chosen


@pytest.fixture
def policy():
    return learn_policy(
        [make_record(region=Region.R1, overtake=True, index=0),
         make_record(region=Region.R3, index=1),
         make_record(tau=4, region=Region.R2, overtake=True, kind='hairpin',
                     index=0)])


def test_save_policy_round_trip(tmp_path, policy):
    path = tmp_path / 'policy.json'

    save_policy(policy, path)

    assert load_policy(path) == policy
    document = json.loads(path.read_text())
    assert document['schema'] == 'contourrace.policy/1'
    assert [entry['chosen'] for entry in document['portions']] == \
        ['R1', 'R2']


def test_save_policy_is_byte_stable(tmp_path, policy):
    first, second = tmp_path / 'first.json', tmp_path / 'second.json'

    save_policy(policy, first)
    save_policy(load_policy(first), second)

    assert first.read_bytes() == second.read_bytes()


def test_load_policy_truncated(tmp_path, policy):
    path = tmp_path / 'policy.json'
    save_policy(policy, path)
    text = path.read_text()
    path.write_text(text[:len(text) // 2])

    with pytest.raises(PolicyError):
        load_policy(path)


def test_load_policy_unknown_schema(tmp_path, policy):
    path = tmp_path / 'policy.json'
    document = policy.as_dict()
    document['schema'] = 'something.else/2'
    path.write_text(json.dumps(document))

    with pytest.raises(PolicyError):
        load_policy(path)


def test_load_policy_malformed_entry(tmp_path):
    path = tmp_path / 'policy.json'
    path.write_text(json.dumps({'schema': 'contourrace.policy/1',
                                'portions': [{'tau': 1}]}))

    with pytest.raises(PolicyError):
        load_policy(path)


def test_policy_map_rejects_inconsistent_counts(tmp_path):
    path = tmp_path / 'policy.json'
    path.write_text(json.dumps({
        'schema': 'contourrace.policy/1',
        'portions': [{'tau': 1, 'kind': 'straight',
                      'overtakes': {'R1': 3}, 'totals': {'R1': 2}}],
    }))

    with pytest.raises(PolicyError):
        load_policy(path)


def test_records_round_trip_in_index_order(tmp_path):
    records = [make_record(index=3), make_record(index=1, overtake=True),
               make_record(index=2, failed=True)]
    path = tmp_path / 'records.jsonl'

    write_records(path, records)

    loaded = read_records(path)
    assert [record.index for record in loaded] == [1, 2, 3]
    assert loaded[0] == records[1]
    assert loaded[0].region is Region.R1
    assert loaded[1].failure == 'boom'


def test_read_records_skips_a_torn_line(tmp_path, caplog):
    path = tmp_path / 'records.jsonl'
    write_records(path, [make_record(index=0), make_record(index=1)])
    with path.open('a') as fp:
        fp.write('{"tau":1,"ind')

    assert len(read_records(path)) == 2
    assert 'Skipping a torn record line' in caplog.text


def test_read_records_missing_file(tmp_path):
    assert read_records(tmp_path / 'absent.jsonl') == []


def test_trial_record_counted():
    assert make_record().counted
    assert not make_record(failed=True).counted
    assert not make_record(valid=False).counted


def test_run_trial_invalid_start(fixture_track, fixture_raceline, straight,
                                 params):
    init = generate_initial_conditions(straight, OFF_TRACK_GRID,
                                       fixture_track, fixture_raceline,
                                       params)[0]

    record = run_trial(init, fixture_track, fixture_raceline, params)

    assert not record.valid
    assert not record.counted
    assert record.steps == 0
    assert record.failure == init.reason
    assert record.region is init.region


def _free_start(track, params):
    portion = PortionSpec(9, 'straight', (120.0, 160.0), (120.0, 160.0),
                          anchor=110.0, box_half_length=5.0)
    ego = state_on_track(track, 110.0, speed=15.0, params=params)
    return InitialCondition(0, portion, 0.0, 0.0, 0.0, Region.R1, ego, None)


def test_run_trial_free_track_reaches_corridor_end(
        fixture_track, fixture_raceline, params, small_config):
    init = _free_start(fixture_track, params)

    record = run_trial(init, fixture_track, fixture_raceline, params,
                       small_config, log_stride=1)

    assert not record.failed
    assert record.counted
    assert not record.overtake
    assert record.boundary_violations == 0
    assert record.min_gap is None
    assert record.log[-1]['ego'][8] >= 160.0
    assert len(record.log) == record.steps
    assert record.modes == [[0, 'Normal']]


def test_run_trial_is_deterministic(fixture_track, fixture_raceline, params,
                                    small_config):
    init = _free_start(fixture_track, params)

    first = run_trial(init, fixture_track, fixture_raceline, params,
                      small_config, T_sim=0.5)
    second = run_trial(init, fixture_track, fixture_raceline, params,
                       small_config, T_sim=0.5)

    assert first.steps == 10
    assert first == second


def test_run_doe_writes_and_resumes(tmp_path, fixture_track,
                                    fixture_raceline, straight, params):
    path = tmp_path / 'records_1.jsonl'
    # A record already on disk is kept and not simulated again
    write_records(path, [make_record(index=0, overtake=True)])

    results = run_doe(fixture_track, fixture_raceline, [straight],
                      grid=OFF_TRACK_GRID, params=params, out_dir=tmp_path)

    records = results[1]
    assert [record.index for record in records] == [0, 1, 2, 3]
    assert records[0].overtake
    assert not any(record.valid for record in records[1:])
    assert read_records(path) == records

    again = run_doe(fixture_track, fixture_raceline, [straight],
                    grid=OFF_TRACK_GRID, params=params, out_dir=tmp_path)
    assert again[1] == records


def test_run_doe_without_output_directory(fixture_track, fixture_raceline,
                                          fixture_portions, params):
    results = run_doe(fixture_track, fixture_raceline, fixture_portions[:2],
                      grid=OFF_TRACK_GRID, params=params)

    assert list(results) == [1, 2]
    assert all(len(records) == 4 for records in results.values())
    assert results[2][0].kind == 'sweeper'


def test_speed_summary():
    records = [
        make_record(index=0, speed_scale=-0.2, overtake=True),
        make_record(index=1, speed_scale=-0.2),
        make_record(index=2, speed_scale=0.2),
        make_record(index=3, speed_scale=0.2, failed=True),
        make_record(tau=2, index=0, speed_scale=0.0, overtake=True,
                    kind='sweeper'),
    ]

    assert speed_summary(records) == [
        (1, 'straight', -0.2, 1, 2),
        (1, 'straight', 0.2, 0, 1),
        (2, 'sweeper', 0.0, 1, 1),
    ]


def test_write_speed_summary(tmp_path):
    path = tmp_path / 'speed.csv'

    write_speed_summary([make_record(overtake=True)], path)

    header, rows = read_csv(path)
    assert header == ['tau', 'kind', 'speed_scale', 'overtakes', 'trials']
    assert rows == [['1', 'straight', '0.0', '1', '1']]


def test_write_probability_table(tmp_path, policy):
    path = tmp_path / 'probabilities.csv'

    write_probability_table(policy, path)

    header, rows = read_csv(path)
    assert header == ['tau', 'kind', 'p_R1', 'p_R2', 'p_R3', 'p_R4']
    assert rows == [['1', 'straight', '1.0', '', '0.0', ''],
                    ['4', 'hairpin', '', '1.0', '', '']]


def test_write_probability_table_empty_policy(tmp_path):
    path = tmp_path / 'probabilities.csv'

    write_probability_table(PolicyMap([]), path)

    assert read_csv(path) == (['tau', 'kind', 'p_R1', 'p_R2', 'p_R3', 'p_R4'],
                              [])


@pytest.mark.slow
def test_run_trial_overtakes_a_slower_obstacle(fixture_track,
                                               fixture_raceline, straight,
                                               params, small_config):
    grid = DoeGrid([0.45], [0.2], [-0.2])
    init = generate_initial_conditions(straight, grid, fixture_track,
                                       fixture_raceline, params)[0]

    record = run_trial(init, fixture_track, fixture_raceline, params,
                       small_config)

    assert not record.failed
    assert record.overtake
    assert record.min_gap >= 3.5 - 1e-2
    assert isinstance(record, TrialRecord)
    assert np.isfinite(record.overtake_time)


def test_run_lap_short_horizon(fixture_track, params, small_config):
    result = run_lap(fixture_track, params, small_config, T_sim=0.5,
                     speed=12.0)

    assert not result.failed
    assert not result.completed
    assert len(result.log) == 10
    assert result.boundary_violations == 0
    thetas = [entry['ego'][8] for entry in result.log]
    assert all(b > a for a, b in zip(thetas, thetas[1:]))


@pytest.mark.slow
def test_run_lap_completes_the_fixture_track(fixture_track, params,
                                             small_config):
    result = run_lap(fixture_track, params, small_config)

    assert not result.failed
    assert result.completed
    assert result.boundary_violations == 0
    thetas = [entry['ego'][8] for entry in result.log]
    assert all(b >= a for a, b in zip(thetas, thetas[1:]))


@pytest.mark.slow
def test_run_trial_holds_the_left_half(fixture_track, fixture_raceline,
                                       params, small_config):
    init = _free_start(fixture_track, params)

    record = run_trial(init, fixture_track, fixture_raceline, params,
                       small_config, mode_rule=lambda ego: Mode.DRIVE_LEFT,
                       log_stride=1)

    assert not record.failed
    assert record.modes == [[0, 'DriveLeft']]
    budget = small_config.slack_budget
    assert budget < lookup(fixture_track, 110.0).r
    assert all(entry['eps_c'] >= -budget for entry in record.log)
    # once settled, the car runs on the left half
    assert record.log[-1]['eps_c'] >= -0.1


@pytest.mark.slow
def test_run_trial_fast_chicane_entry_does_not_fail(
        fixture_track, fixture_raceline, fixture_portions, params,
        shipped_solver):
    chicane = [p for p in fixture_portions if p.kind.value == 'chicane'][0]
    grid = DoeGrid([-0.75], [-0.6], [0.2])
    init = generate_initial_conditions(chicane, grid, fixture_track,
                                       fixture_raceline, params)[0]

    record = run_trial(init, fixture_track, fixture_raceline, params,
                       shipped_solver)

    assert init.valid
    assert not record.failed
    assert record.failure is None


@pytest.mark.slow
def test_reduced_doe_has_no_planner_failures(reduced_doe, reduced_grid):
    for tau, records in reduced_doe.items():
        assert len(records) == len(reduced_grid) == 72
        assert [r.index for r in records if r.failed] == [], tau


@pytest.mark.slow
def test_reduced_doe_overtakes_drop_with_opponent_speed(reduced_doe):
    for tau, records in reduced_doe.items():
        rates = {scale: overtakes / trials for _, _, scale, overtakes, trials
                 in speed_summary(records)}
        assert rates[-0.2] >= rates[0.0] >= rates[0.2], (tau, rates)
