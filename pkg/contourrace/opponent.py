"""The non-interactive opponent: a point that follows a raceline."""
import collections

import numpy as np
import structlog

from . import config, utils
from .exceptions import RacelineError

__all__ = ['Raceline', 'ObstacleState', 'load_raceline', 'save_raceline',
           'fallback_speed_profile', 'obstacle_at', 'obstacle_step',
           'predict_obstacle', 'locate', 'traverse_time']

logger = structlog.get_logger()

RACELINE_CSV_HEADER = ['s_m', 'x_m', 'y_m', 'psi_rad', 'vx_mps']

ObstacleState = collections.namedtuple('ObstacleState', 'x y phi s v')


class Raceline(object):
    """Poses and baseline speeds sampled over progress, cyclic over
    `length`."""

    def __init__(self, s, x, y, phi, v):
        s, x, y, phi, v = (np.asarray(values, dtype=float)
                           for values in (s, x, y, phi, v))
        if not (len(s) == len(x) == len(y) == len(phi) == len(v)) or \
                len(s) < 3:
            raise RacelineError("A raceline needs at least 3 samples with "
                                "all columns present")
        if not all(np.all(np.isfinite(values))
                   for values in (s, x, y, phi, v)):
            raise RacelineError("Raceline samples must be finite")
        if np.any(np.diff(s) <= 0):
            raise RacelineError("Raceline progress must increase strictly")
        if np.any(v <= 0):
            raise RacelineError("Raceline speeds must be positive")
        gap = float(np.hypot(x[-1] - x[0], y[-1] - y[0]))
        spacing = np.median(np.diff(s))
        if gap > 5.0 * spacing:
            raise RacelineError("The raceline is open: the closing gap is "
                                "{:.3f} m".format(gap))
        self.s, self.x, self.y, self.v = s, x, y, v
        self.phi = np.unwrap(phi)
        self.length = float(s[-1] - s[0] + gap)
        # closing entry for cyclic interpolation
        self._s = np.append(s - s[0], self.length)
        self._x = np.append(x, x[0])
        self._y = np.append(y, y[0])
        self._phi = np.append(self.phi, self.phi[-1] + utils.wrap_angle(
            self.phi[0] - self.phi[-1]))
        self._v = np.append(v, v[0])

    def interpolate(self, s):
        """Return `(x, y, phi, v)` at progress `s` (wrapped)."""
        wrapped = np.mod(np.asarray(s, dtype=float) - self.s[0], self.length)
        return (np.interp(wrapped, self._s, self._x),
                np.interp(wrapped, self._s, self._y),
                utils.wrap_angle(np.interp(wrapped, self._s, self._phi)),
                np.interp(wrapped, self._s, self._v))

    def wrap(self, s):
        return float(np.mod(s - self.s[0], self.length) + self.s[0])

    def __eq__(self, other):
        return isinstance(other, Raceline) and all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ('s', 'x', 'y', 'phi', 'v'))

    def __repr__(self):
        return '<Raceline: length={:.3f} samples={}>'.format(
            self.length, len(self.s))


def load_raceline(path):
    """Read a `s_m,x_m,y_m,psi_rad,vx_mps` CSV file.

    :raises RacelineError: If the file is malformed, the progress is not
                           strictly increasing or the loop is open.
    """
    header, rows = utils.read_csv(path)
    if header[:5] != RACELINE_CSV_HEADER:
        raise RacelineError("{}: expected header {}".format(
            path, ','.join(RACELINE_CSV_HEADER)))
    try:
        data = np.array([[float(cell) for cell in row[:5]] for row in rows])
    except (ValueError, IndexError):
        raise RacelineError("{}: malformed row".format(path))
    if data.ndim != 2 or data.shape[1] != 5:
        raise RacelineError("{}: no samples".format(path))
    raceline = Raceline(*data.T)
    logger.info("Raceline loaded", path=str(path), raceline=raceline)
    return raceline


def save_raceline(raceline, path):
    utils.write_csv(path, RACELINE_CSV_HEADER,
                    zip(raceline.s, raceline.x, raceline.y, raceline.phi,
                        raceline.v))


def fallback_speed_profile(track, a_lat_max=None, v_max=None,
                           a_long_max=None):
    """A raceline on the centerline with a curvature-limited speed profile.

    The cornering limit `sqrt(a_lat_max / |kappa|)` is capped at `v_max` and
    then smoothed by cyclic forward (acceleration) and backward (braking)
    passes limited by `a_long_max`.
    """
    a_lat_max = config.A_LAT_MAX if a_lat_max is None else a_lat_max
    v_max = config.V_MAX if v_max is None else v_max
    a_long_max = config.A_LONG_MAX if a_long_max is None else a_long_max
    lut = track.lut
    s = lut['theta'][:-1]
    kappa = np.maximum(np.abs(lut['kappa'][:-1]), config.KAPPA_FLOOR)
    speed = np.minimum(v_max, np.sqrt(a_lat_max / kappa))
    step = np.diff(lut['theta'])
    entries = len(speed)

    changed = True
    while changed:
        changed = False
        for i in range(entries):
            j = (i + 1) % entries
            limit = np.sqrt(speed[i]**2 + 2.0 * a_long_max * step[i])
            if speed[j] > limit:
                speed[j] = limit
                changed = True
    changed = True
    while changed:
        changed = False
        for i in range(entries - 1, -1, -1):
            j = (i + 1) % entries
            limit = np.sqrt(speed[j]**2 + 2.0 * a_long_max * step[i])
            if speed[i] > limit:
                speed[i] = limit
                changed = True

    raceline = Raceline(s, lut['x'][:-1], lut['y'][:-1], lut['phi'][:-1],
                        speed)
    logger.info("Fallback speed profile built", raceline=raceline,
                v_min=float(speed.min()), v_max=float(speed.max()))
    return raceline


def obstacle_at(raceline, s, speed_scale=0.0):
    """Place the obstacle at progress `s` with the scaled baseline speed."""
    x, y, phi, v = raceline.interpolate(s)
    return ObstacleState(float(x), float(y), float(phi), raceline.wrap(s),
                         float(v) * (1.0 + speed_scale))


def obstacle_step(raceline, state, speed_scale, dt):
    """Advance the obstacle by `v_baseline(s) (1 + speed_scale) dt`."""
    if not dt > 0:
        raise ValueError("dt must be positive, got {}".format(dt))
    if not 1.0 + speed_scale > 0:
        raise ValueError("speed_scale must exceed -1, got {}".format(
            speed_scale))
    baseline = float(raceline.interpolate(state.s)[3])
    return obstacle_at(raceline,
                       state.s + baseline * (1.0 + speed_scale) * dt,
                       speed_scale)


def predict_obstacle(raceline, state, speed_scale, dt, steps):
    """Positions over a horizon, `(steps + 1, 2)`, starting at `state`."""
    positions = [(state.x, state.y)]
    for _ in range(steps):
        state = obstacle_step(raceline, state, speed_scale, dt)
        positions.append((state.x, state.y))
    return np.array(positions)


def locate(raceline, x, y):
    """Progress of the raceline point closest to `(x, y)`."""
    xs, ys = raceline._x[:-1], raceline._y[:-1]
    best = int(np.argmin((xs - x)**2 + (ys - y)**2))
    entries = len(xs)
    point = np.array([x, y])
    best_s, best_distance = None, np.inf
    for i in (best - 1 + entries, best):
        i, j = i % entries, (i + 1) % entries
        a = np.array([xs[i], ys[i]])
        segment = np.array([xs[j], ys[j]]) - a
        t = np.clip(np.dot(point - a, segment) / np.dot(segment, segment),
                    0.0, 1.0)
        distance = np.sum((a + t * segment - point)**2)
        if distance < best_distance:
            start, end = raceline._s[i], raceline._s[i + 1]
            best_s, best_distance = start + t * (end - start), distance
    return raceline.wrap(best_s + raceline.s[0])


def traverse_time(raceline, start, end, speed_scale=0.0, resolution=0.5):
    """Time to drive from progress `start` to `end` (forward, cyclic)."""
    distance = (end - start) % raceline.length
    pieces = max(int(np.ceil(distance / resolution)), 1)
    midpoints = start + (np.arange(pieces) + 0.5) * distance / pieces
    speed = raceline.interpolate(midpoints)[3] * (1.0 + speed_scale)
    return float(np.sum(distance / pieces / speed))
