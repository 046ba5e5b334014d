"""The `contourrace` command line.

Every command writes a `manifest.json` next to its outputs; the manifest is
the only output that carries timestamps.
"""
import argparse
import datetime
import json
import pathlib
import sys

import structlog
from dateutil import parser as dateparser

from . import __version__, config, experiments, opponent, race, track, utils
from .dynamics import VehicleParams
from .exceptions import (ConfigError, DegenerateVelocityError, PolicyError,
                         RacelineError, SolverError, TrackError)
from .mpcc import MpccConfig

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_SOLVER_ERROR = 2

MANIFEST_NAME = 'manifest.json'
DETERMINISM_NOTE = ('The experiment grid is deterministic and no random '
                    'seeds exist; rerunning with the same inputs reproduces '
                    'every output except this manifest byte for byte.')
TABLES = ('probabilities.csv', 'speed_summary.csv', 'comparison.csv')


class InputError(Exception):
    """A command line argument is missing or inconsistent."""


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _apply_configs(args):
    config.configure(vehicle=getattr(args, 'vehicle_cfg', None),
                     solver=getattr(args, 'solver_cfg', None),
                     grid=getattr(args, 'grid_cfg', None))


def _load_track(args, need_portions=True):
    path = pathlib.Path(args.track)
    if path.suffix == '.json':
        return track.load_track_bundle(path)
    waypoints, widths = track.load_track_csv(path)
    built = track.build_track(waypoints, widths)
    portions = []
    if args.portions is not None:
        portions = track.load_portions_csv(args.portions)
        track.validate_portions(built, portions)
    elif need_portions:
        raise InputError("--portions is required with a CSV track")
    return built, portions


def _load_raceline(args, built):
    if getattr(args, 'raceline', None):
        return opponent.load_raceline(args.raceline)
    return opponent.fallback_speed_profile(built)


def _out_dir(args):
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out, args, started, **extra):
    inputs = {name: str(value) for name, value in sorted(vars(args).items())
              if name not in ('func', 'out') and value is not None}
    manifest = {
        'tool': 'contourrace',
        'version': __version__,
        'command': args.command,
        'inputs': inputs,
        'output': str(args.out),
        'grid': config.GRID,
        'determinism': DETERMINISM_NOTE,
        'started_at': started,
        'finished_at': _now(),
    }
    manifest.update(extra)
    with (out / MANIFEST_NAME).open('w') as fp:
        fp.write(utils.dumps_stable(manifest, indent=1) + '\n')


def cmd_track_build(args):
    started = _now()
    built, portions = _load_track(args, need_portions=False)
    diagnostics = track.track_diagnostics(built)
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    track.save_track_bundle(built, portions, out)
    for key in ('length', 'closure_residual', 'arc_length_deviation',
                'min_half_width', 'max_curvature'):
        print('{:<22} {:.9g}'.format(key, diagnostics[key]))
    logger.info("Track bundle written", path=str(out), started=started)
    return EXIT_OK


def cmd_simulate(args):
    started = _now()
    _apply_configs(args)
    built, _ = _load_track(args, need_portions=False)
    out = _out_dir(args)
    result = experiments.run_lap(built, VehicleParams.from_config(),
                                 MpccConfig.from_config(), T_sim=args.t_sim,
                                 speed=args.speed)
    rows = [[entry['t']] + entry['ego'] +
            [entry['mode'], entry['status'], entry['eps_c']]
            for entry in result.log]
    utils.write_csv(out / 'trajectory.csv',
                    ['t', 'x', 'y', 'phi', 'vx', 'vy', 'omega', 'd', 'delta',
                     'theta', 'mode', 'status', 'eps_c'], rows)
    if args.svg:
        (out / 'trajectory.svg').write_text(_render_track(
            built, [([entry['ego'][:2] for entry in result.log], 'red')]))
    _write_manifest(out, args, started, completed=result.completed,
                    boundary_violations=result.boundary_violations)
    print('completed={} steps={} boundary_violations={}'.format(
        result.completed, len(result.log), result.boundary_violations))
    if result.failed:
        print('solver failure after {} steps: {}'.format(
            len(result.log), result.failure), file=sys.stderr)
        return EXIT_SOLVER_ERROR
    return EXIT_OK


def _render_track(built, trajectories):
    lut = built.lut
    center = list(zip(lut['x'][:-1], lut['y'][:-1]))
    normal = track.left_normal(lut['phi'][:-1])
    left = [(x + n[0] * w, y + n[1] * w) for (x, y), n, w
            in zip(center, normal, lut['left'][:-1])]
    right = [(x - n[0] * w, y - n[1] * w) for (x, y), n, w
             in zip(center, normal, lut['right'][:-1])]
    return utils.render_svg(center, left, right, trajectories)


def _failed_trials(results):
    return sum(1 for records in results.values() for record in records
               if record.failed)


def cmd_doe(args):
    started = _now()
    _apply_configs(args)
    built, portions = _load_track(args)
    raceline = _load_raceline(args, built)
    out = _out_dir(args)
    results = experiments.run_doe(
        built, raceline, portions, experiments.DoeGrid.from_config(),
        out_dir=out, jobs=args.jobs, progress=True)
    records = [record for portion_records in results.values()
               for record in portion_records]
    policy = experiments.learn_policy(records)
    experiments.write_probability_table(policy, out / 'probabilities.csv')
    experiments.write_speed_summary(records, out / 'speed_summary.csv')
    failed = _failed_trials(results)
    _write_manifest(out, args, started, failed_trials=failed)
    print((out / 'probabilities.csv').read_text(), end='')
    if failed:
        print('{} trials failed in the planner'.format(failed),
              file=sys.stderr)
        return EXIT_SOLVER_ERROR
    return EXIT_OK


def cmd_policy(args):
    records_dir = pathlib.Path(args.records)
    records = []
    for path in sorted(records_dir.glob('records_*.jsonl')):
        records.extend(experiments.read_records(path))
    if not records:
        raise InputError("No records found in {}".format(records_dir))
    policy = experiments.learn_policy(records)
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    experiments.save_policy(policy, out)
    for tau in sorted(policy.entries):
        entry = policy.entries[tau]
        print('{} {:<8} {}'.format(tau, entry.kind, entry.chosen.name
                                   if entry.chosen else 'unlearnable'))
    return EXIT_OK


def cmd_race(args):
    started = _now()
    _apply_configs(args)
    built, portions = _load_track(args)
    raceline = _load_raceline(args, built)
    out = _out_dir(args)
    grid = experiments.DoeGrid.from_config()
    if args.policy is None:
        results = experiments.run_doe(built, raceline, portions, grid,
                                      out_dir=out, jobs=args.jobs,
                                      prefix='off', progress=True)
        result = race.RaceResult(portions, results, {})
    else:
        policy = experiments.load_policy(args.policy)
        result = race.compare_policies(
            built, raceline, portions, policy, grid, out_dir=out,
            jobs=args.jobs, lookahead=args.lookahead, progress=True)
    race.write_comparison_table(result, out / 'comparison.csv')
    failed = (_failed_trials(result.records_off) +
              _failed_trials(result.records_on))
    _write_manifest(out, args, started, failed_trials=failed)
    print((out / 'comparison.csv').read_text(), end='')
    if failed:
        print('{} trials failed in the planner'.format(failed),
              file=sys.stderr)
        return EXIT_SOLVER_ERROR
    return EXIT_OK


def cmd_report(args):
    out = pathlib.Path(args.out)
    manifest_path = out / MANIFEST_NAME
    if not manifest_path.exists():
        raise InputError("No manifest in {}".format(out))
    try:
        with manifest_path.open() as fp:
            manifest = json.load(fp)
    except ValueError as e:
        raise InputError("{}: malformed manifest: {}".format(manifest_path, e))
    duration = (dateparser.isoparse(manifest['finished_at']) -
                dateparser.isoparse(manifest['started_at']))
    print('command   {}'.format(manifest['command']))
    print('version   {}'.format(manifest['version']))
    print('started   {}'.format(manifest['started_at']))
    print('duration  {:.1f} s'.format(duration.total_seconds()))
    for name in TABLES:
        path = out / name
        if path.exists():
            print('\n{}'.format(name))
            print(path.read_text(), end='')
    return EXIT_OK


def _add_inputs(parser, portions=True, raceline=True, grid=True):
    parser.add_argument('--track', required=True,
                        help='track bundle (.json) or centerline CSV')
    if portions:
        parser.add_argument('--portions', help='portions CSV')
    if raceline:
        parser.add_argument('--raceline',
                            help='raceline CSV; defaults to a centerline '
                                 'speed profile')
    parser.add_argument('--vehicle-cfg', dest='vehicle_cfg')
    parser.add_argument('--solver-cfg', dest='solver_cfg')
    if grid:
        parser.add_argument('--grid-cfg', dest='grid_cfg')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='contourrace',
        description='Contouring control racing simulations and overtaking '
                    'policy experiments.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s {}'.format(__version__))
    commands = parser.add_subparsers(dest='command', required=True)

    track_parser = commands.add_parser('track', help='track bundles')
    track_commands = track_parser.add_subparsers(dest='action',
                                                 required=True)
    build = track_commands.add_parser('build', help='build a track bundle')
    build.add_argument('--track', required=True, help='centerline CSV')
    build.add_argument('--portions', help='portions CSV')
    build.add_argument('--out', required=True, help='bundle JSON path')
    build.set_defaults(func=cmd_track_build)

    simulate = commands.add_parser('simulate', help='drive a free lap')
    _add_inputs(simulate, raceline=False, grid=False)
    simulate.add_argument('--out', required=True)
    simulate.add_argument('--svg', action='store_true')
    simulate.add_argument('--t-sim', dest='t_sim', type=float)
    simulate.add_argument('--speed', type=float, default=10.0)
    simulate.set_defaults(func=cmd_simulate)

    doe = commands.add_parser('doe', help='run the experiment grid')
    _add_inputs(doe)
    doe.add_argument('--out', required=True)
    doe.add_argument('--jobs', type=int, default=1)
    doe.set_defaults(func=cmd_doe)

    policy = commands.add_parser('policy', help='learn the policy map')
    policy.add_argument('--records', required=True,
                        help='directory with records_*.jsonl files')
    policy.add_argument('--out', required=True, help='policy JSON path')
    policy.set_defaults(func=cmd_policy)

    race_parser = commands.add_parser(
        'race', help='compare overtakes with and without a policy')
    _add_inputs(race_parser)
    race_parser.add_argument('--policy')
    race_parser.add_argument('--out', required=True)
    race_parser.add_argument('--jobs', type=int, default=1)
    race_parser.add_argument('--lookahead', type=float)
    race_parser.set_defaults(func=cmd_race)

    report = commands.add_parser('report', help='summarize an output set')
    report.add_argument('--out', required=True)
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config.configure_logging()
        return args.func(args)
    except (InputError, ConfigError, TrackError, RacelineError, PolicyError,
            OSError) as e:
        logger.error("Invalid input", command=args.command, error=str(e))
        print('error: {}'.format(e), file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (SolverError, DegenerateVelocityError) as e:
        logger.error("Numerical failure", command=args.command, error=str(e))
        print('error: {}'.format(e), file=sys.stderr)
        return EXIT_SOLVER_ERROR


if __name__ == '__main__':
    raise SystemExit(main())
