"""Offline overtaking experiments and policy learning.

A design of experiments places the ego behind the opponent at every cell of a
lateral x longitudinal x speed grid, simulates each start to the end of the
portion's overtaking corridor and aggregates the outcomes per start region
into a policy map.
"""
import collections
import concurrent.futures
import json
import math
import pathlib

import numpy as np
import structlog
from tqdm import tqdm

from . import config, dynamics, utils
from .dynamics import VehicleState
from .exceptions import (ConfigError, DegenerateVelocityError, PolicyError,
                         PointTooFarError, SolverError)
from .mpcc import Mode, MpccConfig, Planner, fallback_input
from .opponent import (locate, obstacle_at, obstacle_step, predict_obstacle,
                       traverse_time)
from .track import (Region, contouring_errors, left_normal, lookup,
                    lookup_many, project)

__all__ = ['DoeGrid', 'InitialCondition', 'TrialRecord', 'PolicyEntry',
           'PolicyMap', 'generate_initial_conditions', 'check_overtake',
           'simulate', 'run_trial', 'run_lap', 'learn_policy', 'save_policy',
           'load_policy', 'read_records', 'write_records', 'run_doe',
           'speed_summary', 'write_probability_table', 'write_speed_summary']

logger = structlog.get_logger()

POLICY_SCHEMA = 'contourrace.policy/1'
T_SIM_MARGIN = 1.2
PROBABILITY_CSV_HEADER = ['tau', 'kind', 'p_R1', 'p_R2', 'p_R3', 'p_R4']
SPEED_CSV_HEADER = ['tau', 'kind', 'speed_scale', 'overtakes', 'trials']


class DoeGrid(object):
    """Lateral offsets (fractions of the half-width, positive to the left),
    longitudinal offsets (fractions of the sampling box half-length) and
    opponent speed scales."""

    def __init__(self, lateral, longitudinal, speed, allow_empty=False):
        self.lateral = [float(value) for value in lateral]
        self.longitudinal = [float(value) for value in longitudinal]
        self.speed = [float(value) for value in speed]
        offsets = self.lateral + self.longitudinal
        if not allow_empty and \
                not (self.lateral and self.longitudinal and self.speed):
            raise ValueError("Every grid axis needs at least one value")
        if any(not -1.0 < value < 1.0 for value in offsets):
            raise ValueError("Grid offsets must lie in (-1, 1)")
        if any(not value > -1.0 for value in self.speed):
            raise ValueError("Speed scales must exceed -1")

    @classmethod
    def from_config(cls):
        """The configured grid.

        :raises ConfigError: If the configured axes are invalid.
        """
        try:
            return cls(config.GRID['lateral'], config.GRID['longitudinal'],
                       config.GRID['speed'])
        except ValueError as e:
            raise ConfigError("Invalid experiment grid: {}".format(e))

    @classmethod
    def empty(cls):
        return cls([], [], [], allow_empty=True)

    def cells(self):
        """`(index, lateral, longitudinal, speed_scale)` in trial order."""
        cells = []
        for lateral in self.lateral:
            for longitudinal in self.longitudinal:
                for speed in self.speed:
                    cells.append((len(cells), lateral, longitudinal, speed))
        return cells

    def __len__(self):
        return len(self.lateral) * len(self.longitudinal) * len(self.speed)

    def __repr__(self):
        return '<DoeGrid: {}x{}x{}>'.format(
            len(self.lateral), len(self.longitudinal), len(self.speed))


class InitialCondition(object):
    def __init__(self, index, portion, lateral, longitudinal, speed_scale,
                 region, ego, obstacle, valid=True, reason=None):
        self.index = index
        self.portion = portion
        self.lateral = lateral
        self.longitudinal = longitudinal
        self.speed_scale = speed_scale
        self.region = region
        self.ego = ego
        self.obstacle = obstacle
        self.valid = valid
        self.reason = reason

    def __repr__(self):
        return '<InitialCondition: tau={} index={} {}>'.format(
            self.portion.tau, self.index, self.region.name)


class TrialRecord(object):
    """The outcome of one simulated start."""

    FIELDS = ('tau', 'kind', 'index', 'lateral', 'longitudinal',
              'speed_scale', 'region', 'valid', 'overtake', 'overtake_time',
              'failed', 'failure', 'steps', 'fallbacks', 'max_slack',
              'boundary_violations', 'min_gap', 'modes', 'log')

    def __init__(self, **values):
        for name in self.FIELDS:
            setattr(self, name, values.get(name))
        if isinstance(self.region, str):
            self.region = Region[self.region]

    @classmethod
    def from_initial_condition(cls, init, **values):
        return cls(tau=init.portion.tau, kind=init.portion.kind.value,
                   index=init.index, lateral=init.lateral,
                   longitudinal=init.longitudinal,
                   speed_scale=init.speed_scale, region=init.region,
                   valid=init.valid, **values)

    @property
    def counted(self):
        """Whether the trial enters the probability denominators."""
        return bool(self.valid and not self.failed)

    def as_dict(self):
        values = {name: getattr(self, name) for name in self.FIELDS}
        values['region'] = self.region.name if self.region else None
        return values

    @classmethod
    def from_dict(cls, values):
        return cls(**values)

    def __eq__(self, other):
        return isinstance(other, TrialRecord) and \
            utils.dumps_stable(self.as_dict()) == \
            utils.dumps_stable(other.as_dict())

    def __repr__(self):
        return '<TrialRecord: tau={} index={} overtake={} failed={}>'.format(
            self.tau, self.index, self.overtake, self.failed)


def generate_initial_conditions(portion, grid, track, raceline, params=None,
                                margin=None):
    """One initial condition per grid cell, in trial order.

    The obstacle starts at the portion entry on its raceline. The ego starts
    at `anchor + longitudinal * box_half_length` along the centerline,
    shifted `lateral * r` to the left, aligned with the track and driving at
    `ego_speed_factor` times the obstacle's speed. Cells whose start leaves
    the drivable band are kept and marked invalid.
    """
    params = params or dynamics.VehicleParams.from_config()
    margin = config.TRACK_MARGIN if margin is None else margin
    entry = lookup(track, portion.span[0])
    start = locate(raceline, entry.x_t, entry.y_t)
    factor = config.GRID['ego_speed_factor']

    conditions = []
    for index, lateral, longitudinal, scale in grid.cells():
        obstacle = obstacle_at(raceline, start, scale)
        theta = (portion.anchor + longitudinal * portion.box_half_length) % \
            track.length
        ref = lookup_many(track, theta)
        offset = lateral * float(ref['r'])
        x, y = (np.array([ref['x'], ref['y']]) +
                offset * left_normal(float(ref['phi'])))
        speed = factor * obstacle.v
        kappa = float(ref['kappa'])
        ego = VehicleState(x, y, float(ref['phi']), speed, 0.0,
                           speed * kappa,
                           dynamics.steady_state_drive(speed, params),
                           dynamics.steady_state_steering(kappa, params),
                           theta)
        reason = None
        if abs(offset) > float(ref['r']) - margin:
            reason = 'start outside the drivable band'
        elif not speed > params.vx_min:
            reason = 'start speed at or below vx_min'
        region = Region.from_halves(front=longitudinal >= 0,
                                    left=lateral >= 0)
        conditions.append(InitialCondition(
            index, portion, lateral, longitudinal, scale, region, ego,
            obstacle, valid=reason is None, reason=reason))
    return conditions


def _obstacle_progress(track, obstacle):
    return project(track, obstacle.x, obstacle.y)


def check_overtake(ego, obstacle, track, corridor):
    """Whether the ego is ahead of the obstacle while the obstacle is inside
    the corridor `(start, end)`."""
    ego = np.asarray(ego, dtype=float)
    ego_theta = project(track, ego[dynamics.X], ego[dynamics.Y],
                        hint=ego[dynamics.THETA])
    obstacle_theta = _obstacle_progress(track, obstacle)
    start, end = corridor
    width = (end - start) % track.length
    if not (obstacle_theta - start) % track.length < width:
        return False
    return float(utils.progress_delta(ego_theta, obstacle_theta,
                                      track.length)) > 0


Step = collections.namedtuple(
    'Step', 'index time ego obstacle mode solution fallback')


def simulate(ego, track, planner, steps, raceline=None, obstacle=None,
             speed_scale=0.0, mode_rule=None, max_fallbacks=None):
    """Drive the ego for up to `steps` control periods, yielding a `Step`
    after each one.

    :param mode_rule: A callable mapping the ego state to a `Mode`; `None`
                      keeps the controller in `Mode.NORMAL`.

    :raises SolverError: After more than `max_fallbacks` consecutive periods
                         without a usable plan.
    """
    mpcc_config, params = planner.config, planner.params
    dt = mpcc_config.dt
    if max_fallbacks is None:
        max_fallbacks = config.GRID['max_fallbacks']
    ego = VehicleState(ego)
    log = logger.bind(steps=steps)
    previous, consecutive = None, 0
    for index in range(steps):
        mode = mode_rule(ego) if mode_rule is not None else Mode.NORMAL
        prediction = None
        if obstacle is not None:
            prediction = predict_obstacle(raceline, obstacle, speed_scale,
                                          dt, mpcc_config.N)
        try:
            solution = planner.plan(ego, prediction, mode)
        except (SolverError, DegenerateVelocityError) as e:
            log.warning("Planner failed", step=index, error=str(e))
            planner.reset()
            solution = None
        fallback = solution is None or not solution.usable
        if fallback:
            consecutive += 1
            if consecutive > max_fallbacks:
                raise SolverError(
                    "{} consecutive fallbacks at step {}".format(
                        consecutive, index))
            control = fallback_input(previous, ego, mpcc_config)
            log.info("Fallback input used", step=index,
                     consecutive=consecutive)
        else:
            consecutive = 0
            control = solution.u_star
        previous = np.array(control)

        state = dynamics.integrate(ego, control, params, dt)
        for i in (dynamics.D, dynamics.DELTA):
            state[i] = np.clip(state[i], mpcc_config.x_lower[i],
                               mpcc_config.x_upper[i])
        projected = project(track, state[dynamics.X], state[dynamics.Y],
                            hint=state[dynamics.THETA])
        state[dynamics.THETA] = utils.unwrap_progress(
            projected, state[dynamics.THETA], track.length)
        ego = VehicleState(state)
        if obstacle is not None:
            obstacle = obstacle_step(raceline, obstacle, speed_scale, dt)
        yield Step(index, (index + 1) * dt, ego, obstacle, mode, solution,
                   fallback)


def default_sim_time(track, raceline, portion, obstacle, speed_scale):
    """Time for the obstacle to drive to the corridor end, plus 20%."""
    end = lookup(track, portion.corridor[1])
    finish = locate(raceline, end.x_t, end.y_t)
    return T_SIM_MARGIN * traverse_time(raceline, obstacle.s, finish,
                                        speed_scale)


def _log_entry(step, eps_c):
    solution = step.solution
    entry = {
        't': step.time,
        'ego': step.ego.vector.tolist(),
        'mode': step.mode.value,
        'eps_c': eps_c,
        'fallback': step.fallback,
        'status': solution.status.value if solution else None,
        'slack': solution.slack_used if solution else None,
        'safety_slack': solution.safety_slack_used if solution else None,
    }
    if step.obstacle is not None:
        entry['obstacle'] = list(step.obstacle)
    return entry


def run_trial(init, track, raceline, params=None, solver_config=None,
              T_sim=None, mode_rule=None, max_fallbacks=None,
              log_stride=None):
    """Simulate one start until the first overtake, the obstacle leaving
    the corridor or `T_sim`.

    Planner failures do not raise: the record is flagged `failed`.

    :return TrialRecord: The outcome with a strided trajectory log.
    """
    if not init.valid:
        return TrialRecord.from_initial_condition(
            init, overtake=False, failed=False, failure=init.reason,
            steps=0, fallbacks=0, boundary_violations=0, modes=[], log=[])
    params = params or dynamics.VehicleParams.from_config()
    solver_config = solver_config or MpccConfig.from_config()
    portion = init.portion
    log_stride = log_stride or config.GRID['log_stride']
    if T_sim is None:
        T_sim = config.GRID['T_sim']
    if T_sim is None and init.obstacle is None:
        distance = (portion.corridor[1] - init.ego.theta) % track.length
        T_sim = T_SIM_MARGIN * distance / init.ego.vx
    elif T_sim is None:
        T_sim = default_sim_time(track, raceline, portion, init.obstacle,
                                 init.speed_scale)
    steps = int(math.ceil(T_sim / solver_config.dt - 1e-9))
    log = logger.bind(tau=portion.tau, index=init.index, steps=steps)
    log.debug("Trial started")

    planner = Planner(track, params, solver_config)
    outcome = {
        'overtake': False, 'overtake_time': None, 'failed': False,
        'failure': None, 'steps': 0, 'fallbacks': 0, 'max_slack': 0.0,
        'boundary_violations': 0, 'min_gap': None, 'modes': [], 'log': [],
    }
    last_mode = None
    try:
        for step in simulate(init.ego, track, planner, steps, raceline,
                             init.obstacle, init.speed_scale, mode_rule,
                             max_fallbacks):
            outcome['steps'] = step.index + 1
            outcome['fallbacks'] += int(step.fallback)
            if step.solution is not None and step.solution.usable:
                outcome['max_slack'] = max(outcome['max_slack'],
                                           step.solution.slack_used)
            if step.mode is not last_mode:
                outcome['modes'].append([step.index, step.mode.value])
                last_mode = step.mode
            ego = step.ego
            eps_c, _ = contouring_errors(track, ego.theta, ego.x, ego.y)
            if abs(eps_c) > lookup(track, ego.theta).r:
                outcome['boundary_violations'] += 1
            if step.index % log_stride == 0:
                outcome['log'].append(_log_entry(step, eps_c))
            if step.obstacle is None:
                ahead = utils.progress_delta(ego.theta, portion.corridor[1],
                                             track.length)
                if ahead >= 0:
                    break
                continue
            gap = float(np.hypot(ego.x - step.obstacle.x,
                                 ego.y - step.obstacle.y))
            if outcome['min_gap'] is None or gap < outcome['min_gap']:
                outcome['min_gap'] = gap
            if check_overtake(ego, step.obstacle, track, portion.corridor):
                outcome['overtake'] = True
                outcome['overtake_time'] = step.time
                break
            obstacle_theta = _obstacle_progress(track, step.obstacle)
            if not portion.in_corridor(obstacle_theta, track.length):
                break
    except (SolverError, DegenerateVelocityError, PointTooFarError) as e:
        log.warning("Trial failed", error=str(e))
        outcome['failed'] = True
        outcome['failure'] = str(e)
    record = TrialRecord.from_initial_condition(init, **outcome)
    log.info("Trial finished", overtake=record.overtake,
             failed=record.failed, steps=record.steps)
    return record


class LapResult(object):
    def __init__(self, log, completed, boundary_violations, failed=False,
                 failure=None):
        self.log = log
        self.completed = completed
        self.boundary_violations = boundary_violations
        self.failed = failed
        self.failure = failure

    def __repr__(self):
        return '<LapResult: completed={} violations={} failed={}>'.format(
            self.completed, self.boundary_violations, self.failed)


def run_lap(track, params=None, solver_config=None, T_sim=None, speed=10.0,
            log_stride=1):
    """Drive one lap on a free track, starting on the centerline at
    progress 0.

    :return LapResult: The trajectory log and boundary audit.
    """
    params = params or dynamics.VehicleParams.from_config()
    solver_config = solver_config or MpccConfig.from_config()
    if T_sim is None:
        T_sim = 1.5 * track.length / speed
    steps = int(math.ceil(T_sim / solver_config.dt - 1e-9))
    ref = lookup_many(track, 0.0)
    kappa = float(ref['kappa'])
    ego = VehicleState(float(ref['x']), float(ref['y']), float(ref['phi']),
                       speed, 0.0, speed * kappa,
                       dynamics.steady_state_drive(speed, params),
                       dynamics.steady_state_steering(kappa, params), 0.0)
    planner = Planner(track, params, solver_config)
    rows, violations, completed = [], 0, False
    try:
        for step in simulate(ego, track, planner, steps):
            state = step.ego
            eps_c, _ = contouring_errors(track, state.theta, state.x,
                                         state.y)
            if abs(eps_c) > lookup(track, state.theta).r:
                violations += 1
            if step.index % log_stride == 0:
                rows.append(_log_entry(step, eps_c))
            if state.theta >= track.length:
                completed = True
                break
    except (SolverError, DegenerateVelocityError, PointTooFarError) as e:
        logger.warning("Lap failed", error=str(e), steps=len(rows))
        return LapResult(rows, False, violations, True, str(e))
    result = LapResult(rows, completed, violations)
    logger.info("Lap finished", result=result)
    return result


class PolicyEntry(object):
    """Overtake counts of one portion, by start region."""

    def __init__(self, tau, kind, overtakes, totals, failed=None):
        self.tau = int(tau)
        self.kind = kind
        self.overtakes = {region: int(overtakes.get(region, 0))
                          for region in Region}
        self.totals = {region: int(totals.get(region, 0))
                       for region in Region}
        self.failed = {region: int((failed or {}).get(region, 0))
                       for region in Region}
        for region in Region:
            if not 0 <= self.overtakes[region] <= self.totals[region]:
                raise PolicyError("Portion {}: overtakes exceed trials in "
                                  "{}".format(self.tau, region.name))

    @property
    def probabilities(self):
        return {region: (self.overtakes[region] / self.totals[region]
                         if self.totals[region] else None)
                for region in Region}

    @property
    def learnable(self):
        return any(self.totals.values())

    @property
    def chosen(self):
        """Region of highest probability, the lowest index on ties."""
        best, best_p = None, None
        for region, p in self.probabilities.items():
            if p is not None and (best_p is None or p > best_p):
                best, best_p = region, p
        return best

    def as_dict(self):
        return {
            'tau': self.tau,
            'kind': self.kind,
            'overtakes': {r.name: v for r, v in self.overtakes.items()},
            'totals': {r.name: v for r, v in self.totals.items()},
            'failed': {r.name: v for r, v in self.failed.items()},
            'probabilities': {r.name: p
                              for r, p in self.probabilities.items()},
            'chosen': self.chosen.name if self.chosen else None,
        }

    @classmethod
    def from_dict(cls, data):
        def regions(counts):
            return {Region[name]: value for name, value in counts.items()}
        return cls(data['tau'], data['kind'], regions(data['overtakes']),
                   regions(data['totals']), regions(data.get('failed', {})))

    def __repr__(self):
        return '<PolicyEntry: tau={} chosen={}>'.format(
            self.tau, self.chosen.name if self.chosen else None)


class PolicyMap(object):
    def __init__(self, entries):
        self.entries = {entry.tau: entry for entry in entries}

    def region_for(self, tau):
        entry = self.entries.get(tau)
        return entry.chosen if entry is not None else None

    def as_dict(self):
        return {
            'schema': POLICY_SCHEMA,
            'portions': [self.entries[tau].as_dict()
                         for tau in sorted(self.entries)],
        }

    def __eq__(self, other):
        return isinstance(other, PolicyMap) and \
            self.as_dict() == other.as_dict()

    def __repr__(self):
        return '<PolicyMap: {}>'.format(', '.join(
            '{}={}'.format(tau, entry.chosen.name if entry.chosen else None)
            for tau, entry in sorted(self.entries.items())))


def learn_policy(records):
    """Aggregate trial records into per-region overtake probabilities.

    Invalid and failed trials are left out of the denominators; failures are
    counted separately.

    :param records: An iterable of `TrialRecord`, any portions mixed.
    :return PolicyMap: One entry per portion seen.
    """
    counts = collections.OrderedDict()
    for record in sorted(records, key=lambda r: (r.tau, r.index)):
        entry = counts.setdefault(record.tau, {
            'kind': record.kind,
            'overtakes': collections.Counter(),
            'totals': collections.Counter(),
            'failed': collections.Counter(),
        })
        if not record.valid:
            continue
        if record.failed:
            entry['failed'][record.region] += 1
            continue
        entry['totals'][record.region] += 1
        entry['overtakes'][record.region] += int(bool(record.overtake))

    entries = []
    for tau, data in counts.items():
        entry = PolicyEntry(tau, data['kind'], data['overtakes'],
                            data['totals'], data['failed'])
        if not entry.learnable:
            logger.warning("Portion has no usable trials", tau=tau)
        entries.append(entry)
    policy = PolicyMap(entries)
    logger.info("Policy learned", policy=policy)
    return policy


def save_policy(policy, path):
    with open(str(path), 'w') as fp:
        fp.write(utils.dumps_stable(policy.as_dict(), indent=1) + '\n')


def load_policy(path):
    """Read a policy document written by `save_policy`.

    :raises PolicyError: On a truncated document or an unknown schema.
    """
    try:
        with open(str(path)) as fp:
            document = json.load(fp)
    except ValueError as e:
        raise PolicyError("{}: truncated or malformed policy: {}".format(
            path, e))
    if not isinstance(document, dict) or \
            document.get('schema') != POLICY_SCHEMA:
        raise PolicyError("{}: unsupported policy schema {!r}".format(
            path, document.get('schema')
            if isinstance(document, dict) else None))
    try:
        return PolicyMap([PolicyEntry.from_dict(data)
                          for data in document['portions']])
    except (KeyError, TypeError, ValueError) as e:
        raise PolicyError("{}: malformed policy entry: {}".format(path, e))


def read_records(path):
    """Read a JSON-lines record file; a missing file has no records.

    A torn last line left by an interrupted run is skipped.
    """
    path = pathlib.Path(path)
    if not path.exists():
        return []
    records = []
    with path.open() as fp:
        for line in fp:
            line = line.strip()
            if not line:
                continue
            try:
                records.append(TrialRecord.from_dict(json.loads(line)))
            except ValueError:
                logger.warning("Skipping a torn record line", path=str(path))
    return records


def write_records(path, records):
    """Rewrite a record file ordered by trial index."""
    unique = {record.index: record for record in records}
    with open(str(path), 'w') as fp:
        for index in sorted(unique):
            fp.write(utils.dumps_stable(unique[index].as_dict()) + '\n')


def _append_record(path, record):
    with open(str(path), 'a') as fp:
        fp.write(utils.dumps_stable(record.as_dict()) + '\n')


def _run_trial_job(init, track, raceline, params, solver_config, T_sim,
                   mode_rule):
    return run_trial(init, track, raceline, params, solver_config, T_sim,
                     mode_rule)


def run_doe(track, raceline, portions, grid=None, params=None,
            solver_config=None, out_dir=None, jobs=1, T_sim=None,
            mode_rule=None, prefix='records', progress=False):
    """Run the grid on every portion.

    With `out_dir`, each portion's records go to `<prefix>_<tau>.jsonl`;
    trials already present there are not run again, and the file is
    rewritten in trial order at the end.

    :param int jobs: Worker processes; results do not depend on it.
    :return: A dict of `tau` to the portion's records in trial order.
    """
    if grid is None:
        grid = DoeGrid.from_config()
    params = params or dynamics.VehicleParams.from_config()
    solver_config = solver_config or MpccConfig.from_config()
    results = collections.OrderedDict()
    for portion in portions:
        path = None
        done = {}
        if out_dir is not None:
            path = pathlib.Path(out_dir) / '{}_{}.jsonl'.format(
                prefix, portion.tau)
            done = {record.index: record for record in read_records(path)}
        conditions = [init for init in generate_initial_conditions(
            portion, grid, track, raceline, params)
            if init.index not in done]
        log = logger.bind(tau=portion.tau, pending=len(conditions),
                          done=len(done), jobs=jobs)
        log.info("Running portion")
        bar = tqdm(total=len(conditions), disable=not progress,
                   desc='portion {}'.format(portion.tau))
        args = (track, raceline, params, solver_config, T_sim, mode_rule)
        if jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(jobs) as executor:
                futures = [executor.submit(_run_trial_job, init, *args)
                           for init in conditions]
                for future in concurrent.futures.as_completed(futures):
                    record = future.result()
                    done[record.index] = record
                    if path is not None:
                        _append_record(path, record)
                    bar.update()
        else:
            for init in conditions:
                record = _run_trial_job(init, *args)
                done[record.index] = record
                if path is not None:
                    _append_record(path, record)
                bar.update()
        bar.close()
        records = [done[index] for index in sorted(done)]
        if path is not None:
            write_records(path, records)
        results[portion.tau] = records
    return results


def speed_summary(records):
    """Counted trials and overtakes per portion and speed scale."""
    rows = collections.OrderedDict()
    for record in sorted(records, key=lambda r: (r.tau, r.index)):
        if not record.counted:
            continue
        key = (record.tau, record.kind, record.speed_scale)
        overtakes, trials = rows.get(key, (0, 0))
        rows[key] = (overtakes + int(bool(record.overtake)), trials + 1)
    return [key + value for key, value in sorted(rows.items())]


def write_speed_summary(records, path):
    utils.write_csv(path, SPEED_CSV_HEADER, speed_summary(records))


def write_probability_table(policy, path):
    rows = []
    for tau in sorted(policy.entries):
        entry = policy.entries[tau]
        probabilities = entry.probabilities
        rows.append([tau, entry.kind] +
                    [probabilities[region] for region in Region])
    utils.write_csv(path, PROBABILITY_CSV_HEADER, rows)
