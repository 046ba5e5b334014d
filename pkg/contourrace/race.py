"""Switched MPCC races driven by a learned policy map."""
import structlog

from . import config, utils
from .experiments import DoeGrid, run_doe, run_trial
from .mpcc import Mode
from .track import classify_portion, contouring_errors

__all__ = ['RaceResult', 'PolicyModeRule', 'mode_from_policy', 'run_race',
           'compare_policies', 'write_comparison_table']

logger = structlog.get_logger()

COMPARISON_CSV_HEADER = ['tau', 'kind', 'overtakes_off', 'overtakes_on',
                         'trials']


def mode_from_policy(target, ego_left):
    """Map the target region to a drive side.

    :param target: The policy's `Region` for the current portion or `None`.
    :param bool ego_left: Whether the ego is on the left half now.
    :return Mode: `NORMAL` when there is no target or the ego already is on
                  the target side.
    """
    if target is None or target.is_left == ego_left:
        return Mode.NORMAL
    return Mode.DRIVE_LEFT if target.is_left else Mode.DRIVE_RIGHT


class PolicyModeRule(object):
    """Looks up the policy for the portion at the ego's progress plus
    `lookahead` and turns it into a mode."""

    def __init__(self, track, portions, policy, lookahead=None):
        self.track = track
        self.portions = list(portions)
        self.policy = policy
        if lookahead is None:
            lookahead = config.GRID['lookahead']
        self.lookahead = float(lookahead)

    def __call__(self, ego):
        tau = classify_portion(self.track, self.portions,
                               ego.theta + self.lookahead)
        if tau is None:
            return Mode.NORMAL
        eps_c, _ = contouring_errors(self.track, ego.theta, ego.x, ego.y)
        return mode_from_policy(self.policy.region_for(tau), eps_c >= 0)

    def __repr__(self):
        return '<PolicyModeRule: {} lookahead={}>'.format(self.policy,
                                                         self.lookahead)


def run_race(init, track, raceline, portions, policy=None, lookahead=None,
             params=None, solver_config=None, T_sim=None):
    """Run one start with the switched controller.

    Without a policy this is exactly `experiments.run_trial`.
    """
    mode_rule = None
    if policy is not None:
        mode_rule = PolicyModeRule(track, portions, policy, lookahead)
    return run_trial(init, track, raceline, params, solver_config, T_sim,
                     mode_rule)


class RaceResult(object):
    """Per-portion overtake counts with and without the policy."""

    def __init__(self, portions, records_off, records_on):
        self.portions = list(portions)
        self.records_off = records_off
        self.records_on = records_on

    def rows(self):
        rows = []
        for portion in self.portions:
            off = self.records_off.get(portion.tau, [])
            on = self.records_on.get(portion.tau, [])
            rows.append([
                portion.tau,
                portion.kind.value,
                sum(1 for r in off if r.counted and r.overtake),
                sum(1 for r in on if r.counted and r.overtake),
                sum(1 for r in off if r.valid),
            ])
        return rows

    def __repr__(self):
        return '<RaceResult: {}>'.format(self.rows())


def compare_policies(track, raceline, portions, policy, grid=None,
                     params=None, solver_config=None, out_dir=None, jobs=1,
                     T_sim=None, lookahead=None, progress=False,
                     records_off=None):
    """Run the grid on every portion with the policy off, then on.

    The policy-off pass is the plain experiment run, so its records equal
    those of `experiments.run_doe`; pass them as `records_off` to skip it.
    """
    if grid is None:
        grid = DoeGrid.from_config()
    common = dict(grid=grid, params=params, solver_config=solver_config,
                  out_dir=out_dir, jobs=jobs, T_sim=T_sim, progress=progress)
    if records_off is None:
        records_off = run_doe(track, raceline, portions, prefix='off',
                              **common)
    rule = PolicyModeRule(track, portions, policy, lookahead)
    records_on = run_doe(track, raceline, portions, mode_rule=rule,
                         prefix='on', **common)
    result = RaceResult(portions, records_off, records_on)
    logger.info("Policies compared", result=result)
    return result


def write_comparison_table(result, path):
    utils.write_csv(path, COMPARISON_CSV_HEADER, result.rows())

