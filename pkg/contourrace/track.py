"""Arc-length parametrization of a closed circuit.

The centerline waypoints are interpolated with a periodic cubic spline,
reparametrized by arc length `theta` and tabulated in a dense lookup table
of position, tangent heading, half-width and curvature. The planner only
ever reads the table, so wrapping `theta` modulo the lap length happens here.
"""
import collections
import enum
import json

import numpy as np
import structlog
from scipy.interpolate import CubicSpline

from . import config, utils
from .exceptions import OutsideRegionError, PointTooFarError, TrackError

__all__ = ['Track', 'TrackPoint', 'PortionKind', 'PortionSpec', 'Region',
           'build_track', 'lookup', 'lookup_many', 'project',
           'contouring_errors', 'linearized_errors', 'classify_portion',
           'region_of', 'track_diagnostics', 'load_track_csv',
           'load_portions_csv', 'save_track_bundle', 'load_track_bundle']

logger = structlog.get_logger()

TRACK_BUNDLE_SCHEMA = 'contourrace.track/1'
TRACK_CSV_HEADER = ['x_m', 'y_m', 'w_tr_left_m', 'w_tr_right_m']
PORTION_CSV_HEADER = ['tau', 'kind', 'theta_a', 'theta_b',
                      'corridor_a', 'corridor_b']

# Gauss-Legendre rule used for the arc-length integral
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)

TrackPoint = collections.namedtuple('TrackPoint', 'x_t y_t phi_t r theta')


class PortionKind(enum.Enum):
    STRAIGHT = 'straight'
    SWEEPER = 'sweeper'
    HAIRPIN = 'hairpin'
    CHICANE = 'chicane'


class Region(enum.IntEnum):
    """Quarters of a portion's sampling box, relative to the driving
    direction."""

    R1 = 1  # front left
    R2 = 2  # front right
    R3 = 3  # back right
    R4 = 4  # back left

    @property
    def is_front(self):
        return self in (Region.R1, Region.R2)

    @property
    def is_left(self):
        return self in (Region.R1, Region.R4)

    @classmethod
    def from_halves(cls, front, left):
        if front:
            return cls.R1 if left else cls.R2
        return cls.R4 if left else cls.R3


class PortionSpec(object):
    """A labeled stretch of the circuit used for overtaking experiments.

    `span` and `corridor` are `[start, end)` progress intervals that may
    cross the start/finish seam. The sampling box for ego start positions is
    centered `anchor` meters of progress, extends `box_half_length` ahead and
    behind, and covers the full track width.
    """

    def __init__(self, tau, kind, span, corridor, anchor=None,
                 box_half_length=None):
        self.tau = int(tau)
        self.kind = PortionKind(kind.lower() if isinstance(kind, str)
                                else kind)
        self.span = (float(span[0]), float(span[1]))
        self.corridor = (float(corridor[0]), float(corridor[1]))
        if anchor is None:
            anchor = self.span[0] - config.GRID['start_gap']
        if box_half_length is None:
            box_half_length = config.GRID['box_half_length']
        self.anchor = float(anchor)
        self.box_half_length = float(box_half_length)
        if self.span[0] == self.span[1] or \
                self.corridor[0] == self.corridor[1]:
            raise TrackError("Portion {}: empty span or corridor".format(
                self.tau))
        if not self.box_half_length > 0:
            raise TrackError("Portion {}: box_half_length must be "
                             "positive".format(self.tau))

    def span_length(self, length):
        return (self.span[1] - self.span[0]) % length

    def corridor_length(self, length):
        return (self.corridor[1] - self.corridor[0]) % length

    def contains(self, theta, length):
        return (theta - self.span[0]) % length < self.span_length(length)

    def in_corridor(self, theta, length):
        return ((theta - self.corridor[0]) % length <
                self.corridor_length(length))

    def as_dict(self):
        return {
            'tau': self.tau,
            'kind': self.kind.value,
            'span': list(self.span),
            'corridor': list(self.corridor),
            'anchor': self.anchor,
            'box_half_length': self.box_half_length,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['tau'], data['kind'], data['span'], data['corridor'],
                   anchor=data.get('anchor'),
                   box_half_length=data.get('box_half_length'))

    def __eq__(self, other):
        return isinstance(other, PortionSpec) and \
            self.as_dict() == other.as_dict()

    def __repr__(self):
        return '<PortionSpec: {} {} span={} corridor={}>'.format(
            self.tau, self.kind.value, self.span, self.corridor)


class Track(object):
    """A closed circuit parametrized by arc length.

    Not intended to be instantiated by yourself, use `build_track`.
    """

    def __init__(self, spline, length, lut_step, lut, waypoints, widths,
                 margin):
        self.spline = spline
        self.length = length
        self.lut_step = lut_step
        self.lut = lut
        self.waypoints = waypoints
        self.widths = widths
        self.margin = margin

    @property
    def max_half_width(self):
        return float(self.lut['r'].max())

    def __repr__(self):
        return '<Track: length={:.3f} lut_step={:.4f} entries={}>'.format(
            self.length, self.lut_step, len(self.lut['theta']))


def _check_waypoints(points):
    segments = np.roll(points, -1, axis=0) - points
    lengths = np.hypot(segments[:, 0], segments[:, 1])
    if np.any(lengths <= 1e-9):
        raise TrackError("Consecutive waypoints coincide")
    if lengths[-1] > 5.0 * np.median(lengths[:-1]):
        raise TrackError("The centerline is open: the closing gap is {:.3f} m "
                         "against a median spacing of {:.3f} m".format(
                             lengths[-1], np.median(lengths[:-1])))
    n = len(points)
    starts, ends = points, np.roll(points, -1, axis=0)
    for i in range(n - 2):
        j = np.arange(i + 2, n if i > 0 else n - 1)
        if not len(j):
            continue
        if _segments_intersect(starts[i], ends[i], starts[j], ends[j]).any():
            raise TrackError("The centerline intersects itself near "
                             "waypoint {}".format(i))
    return lengths


def _segments_intersect(p1, p2, q1, q2):
    def cross(o, a, b):
        return ((a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) -
                (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0]))

    d1 = cross(q1, q2, p1)
    d2 = cross(q1, q2, p2)
    d3 = cross(p1, p2, q1)
    d4 = cross(p1, p2, q2)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def _arc_lengths(spline, knots):
    """Arc length of `spline` over each interval between `knots`."""
    left, right = knots[:-1, None], knots[1:, None]
    half = 0.5 * (right - left)
    nodes = left + half * (_GAUSS_NODES[None, :] + 1.0)
    speed = np.linalg.norm(spline(nodes, 1), axis=-1)
    return (half[:, 0] * (speed * _GAUSS_WEIGHTS[None, :]).sum(axis=1))


def build_track(waypoints, half_widths, lut_step=None, margin=None):
    """Fit the arc-length parametrized centerline and its lookup table.

    :param waypoints: `(n, 2)` centerline points of a closed circuit, without
                      a repeated endpoint, `n >= 4`.
    :param half_widths: `(n,)` half-widths or `(n, 2)` left/right widths in
                        meters, one per waypoint.
    :param float lut_step: Lookup table resolution in meters.
    :param float margin: Smallest admissible half-width (the vehicle's
                         characteristic radius).
    :return Track: The built track.

    :raises TrackError: If the centerline is too short, open or
        self-intersecting, or a width is not positive.
    """
    lut_step = float(lut_step or config.LUT_STEP)
    margin = float(config.TRACK_MARGIN if margin is None else margin)
    points = np.asarray(waypoints, dtype=float)
    widths = np.asarray(half_widths, dtype=float)
    if widths.ndim == 1:
        widths = np.column_stack([widths, widths])
    if points.ndim != 2 or points.shape[1] != 2 or len(points) < 4:
        raise TrackError("At least 4 waypoints of (x, y) are required")
    if widths.shape != points.shape:
        raise TrackError("Expected one width entry per waypoint")
    if not (np.all(np.isfinite(points)) and np.all(np.isfinite(widths))):
        raise TrackError("Waypoints and widths must be finite")
    if np.any(widths <= 0):
        raise TrackError("Track widths must be positive")
    if not lut_step > 0:
        raise TrackError("lut_step must be positive")
    if np.hypot(*(points[-1] - points[0])) <= 1e-9:
        logger.info("Dropping the duplicated closing waypoint")
        points, widths = points[:-1], widths[:-1]
        if len(points) < 4:
            raise TrackError("At least 4 waypoints of (x, y) are required")

    chords = _check_waypoints(points)
    knots = np.concatenate([[0.0], np.cumsum(chords)])
    closed = np.vstack([points, points[:1]])
    chord_spline = CubicSpline(knots, closed, bc_type='periodic', axis=0)

    # Refine each knot interval so that the arc-length samples are denser
    # than the lookup table, then refit the spline over arc length.
    per_interval = np.maximum(
        4, np.ceil(chords / (0.5 * lut_step)).astype(int))
    fine = np.concatenate(
        [np.linspace(knots[i], knots[i + 1], per_interval[i],
                     endpoint=False) for i in range(len(chords))] +
        [knots[-1:]])
    arc = np.concatenate([[0.0], np.cumsum(_arc_lengths(chord_spline, fine))])
    samples = chord_spline(fine)
    samples[-1] = samples[0]
    spline = CubicSpline(arc, samples, bc_type='periodic', axis=0)
    length = float(arc[-1])
    waypoint_arc = np.interp(knots, fine, arc)

    entries = max(int(round(length / lut_step)), 8)
    step = length / entries
    theta = np.arange(entries) * step
    position = spline(theta)
    tangent = spline(theta, 1)
    curvature = spline(theta, 2)
    speed = np.linalg.norm(tangent, axis=1)
    phi = np.unwrap(np.arctan2(tangent[:, 1], tangent[:, 0]))
    kappa = ((tangent[:, 0] * curvature[:, 1] -
              tangent[:, 1] * curvature[:, 0]) / speed**3)
    left = np.interp(theta, waypoint_arc,
                     np.append(widths[:, 0], widths[0, 0]))
    right = np.interp(theta, waypoint_arc,
                      np.append(widths[:, 1], widths[0, 1]))
    r = np.minimum(left, right)
    if r.min() <= margin:
        raise TrackError("The track is narrower ({:.3f} m) than the vehicle "
                         "margin ({:.3f} m)".format(r.min(), margin))

    # One closing entry at theta = length so interpolation wraps cleanly
    phi_end = phi[-1] + utils.wrap_angle(phi[0] - phi[-1])
    lut = {
        'theta': np.append(theta, length),
        'x': np.append(position[:, 0], position[0, 0]),
        'y': np.append(position[:, 1], position[0, 1]),
        'phi': np.append(phi, phi_end),
        'r': np.append(r, r[0]),
        'left': np.append(left, left[0]),
        'right': np.append(right, right[0]),
        'kappa': np.append(kappa, kappa[0]),
        'speed': np.append(speed, speed[0]),
    }
    track = Track(spline, length, step, lut, points, widths, margin)
    logger.info("Track built", track=track, waypoints=len(points))
    return track


def lookup_many(track, theta):
    """Interpolate the lookup table at (an array of) progress values.

    :return: A dict of arrays `x`, `y`, `phi`, `r`, `kappa` and the wrapped
             `theta`.
    """
    wrapped = np.mod(np.asarray(theta, dtype=float), track.length)
    lut = track.lut
    values = {key: np.interp(wrapped, lut['theta'], lut[key])
              for key in ('x', 'y', 'phi', 'r', 'kappa', 'left', 'right')}
    values['phi'] = utils.wrap_angle(values['phi'])
    values['theta'] = wrapped
    return values


def lookup(track, theta):
    """Return the `TrackPoint` at progress `theta` (any real value)."""
    values = lookup_many(track, theta)
    return TrackPoint(float(values['x']), float(values['y']),
                      float(values['phi']), float(values['r']),
                      float(values['theta']))


def left_normal(phi):
    """Unit normal pointing to the left of the heading `phi`."""
    return np.stack([-np.sin(phi), np.cos(phi)], axis=-1)


def project(track, x, y, hint=None, window=20.0):
    """Return the progress of the centerline point closest to `(x, y)`.

    :param hint: Previous progress; when given only a window of `window`
                 meters around it is searched.
    :return float: Progress in `[0, track.length)`.

    :raises PointTooFarError: If the point is farther than twice the largest
                              half-width from the centerline.
    """
    lut = track.lut
    xs, ys = lut['x'][:-1], lut['y'][:-1]
    entries = len(xs)
    band = 2.0 * track.max_half_width
    if hint is not None:
        center = int(round((hint % track.length) / track.lut_step))
        reach = int(np.ceil(window / track.lut_step))
        candidates = (center + np.arange(-reach, reach + 1)) % entries
        distances = (xs[candidates] - x)**2 + (ys[candidates] - y)**2
        best = int(candidates[np.argmin(distances)])
        if distances.min() > band**2:
            hint = None
    if hint is None:
        distances = (xs - x)**2 + (ys - y)**2
        best = int(np.argmin(distances))
        if distances[best] > band**2:
            raise PointTooFarError(
                "Point ({:.3f}, {:.3f}) is {:.3f} m from the centerline, "
                "band is {:.3f} m".format(x, y, np.sqrt(distances[best]),
                                          band))

    point = np.array([x, y])
    best_theta, best_distance = None, np.inf
    for start in (best - 1, best):
        i, j = start % entries, (start + 1) % entries
        a = np.array([xs[i], ys[i]])
        segment = np.array([xs[j], ys[j]]) - a
        t = np.clip(np.dot(point - a, segment) / np.dot(segment, segment),
                    0.0, 1.0)
        distance = np.sum((a + t * segment - point)**2)
        if distance < best_distance:
            best_distance = distance
            best_theta = (start + t) * track.lut_step
    return float(best_theta % track.length)


def contouring_errors(track, theta_hat, x, y):
    """Contouring and lag error of `(x, y)` against the point at `theta_hat`.

    Positive contouring error means left of the centerline.

    :return: `(eps_c, eps_l)`
    """
    return linearized_errors(track, theta_hat, x, y, theta_hat)


def linearized_errors(track, theta_hat, x, y, theta):
    """Errors against the centerline linearized at `theta_hat` and
    evaluated at `theta`.

    :return: `(eps_c, eps_l)`, arrays if the inputs are arrays.
    """
    ref = lookup_many(track, theta_hat)
    cos_phi, sin_phi = np.cos(ref['phi']), np.sin(ref['phi'])
    offset = np.asarray(theta) - np.asarray(theta_hat)
    x_lin = ref['x'] + cos_phi * offset
    y_lin = ref['y'] + sin_phi * offset
    eps_l = cos_phi * (x_lin - x) + sin_phi * (y_lin - y)
    eps_c = sin_phi * (x_lin - x) - cos_phi * (y_lin - y)
    if np.ndim(eps_c) == 0:
        return float(eps_c), float(eps_l)
    return eps_c, eps_l


def classify_portion(track, portions, theta):
    """Return the label of the portion whose span contains `theta`."""
    wrapped = theta % track.length
    for portion in portions:
        if portion.contains(wrapped, track.length):
            return portion.tau
    return None


def region_of(track, portion, x, y):
    """Return the `Region` of `(x, y)` within the portion's sampling box.

    :raises OutsideRegionError: If the point projects outside the box.
    """
    theta = project(track, x, y, hint=portion.anchor)
    ahead = float(utils.progress_delta(theta, portion.anchor, track.length))
    tolerance = track.lut_step
    if abs(ahead) > portion.box_half_length + tolerance:
        raise OutsideRegionError(
            "Point ({:.3f}, {:.3f}) is {:.3f} m from the anchor of portion "
            "{}".format(x, y, ahead, portion.tau))
    eps_c, _ = contouring_errors(track, theta, x, y)
    if abs(eps_c) > lookup(track, theta).r + tolerance:
        raise OutsideRegionError(
            "Point ({:.3f}, {:.3f}) is off the track in portion {}".format(
                x, y, portion.tau))
    return Region.from_halves(front=ahead >= 0, left=eps_c >= 0)


def track_diagnostics(track):
    """Closure and parametrization quality figures of a built track."""
    start, end = track.spline(0.0), track.spline(track.length)
    heading = np.arctan2(track.spline([0.0, track.length], 1)[:, 1],
                         track.spline([0.0, track.length], 1)[:, 0])
    return {
        'length': track.length,
        'lut_step': track.lut_step,
        'entries': len(track.lut['theta']) - 1,
        'closure_residual': float(np.hypot(*(end - start))),
        'heading_residual': float(abs(utils.wrap_angle(
            heading[1] - heading[0]))),
        'arc_length_deviation': float(
            np.max(np.abs(track.lut['speed'] - 1.0))),
        'min_half_width': float(track.lut['r'].min()),
        'max_curvature': float(np.max(np.abs(track.lut['kappa']))),
    }


def validate_portions(track, portions):
    """Check that portions are disjoint and their corridors meet the span.

    :raises TrackError: On overlapping portions or a detached corridor.
    """
    length = track.length
    for portion in portions:
        corridor_start = utils.progress_delta(portion.corridor[0],
                                              portion.span[0], length)
        if not (-portion.span_length(length) <= corridor_start <
                portion.span_length(length)):
            raise TrackError("Portion {}: the corridor does not start within "
                             "the span".format(portion.tau))
    for i, first in enumerate(portions):
        for second in portions[i + 1:]:
            if first.tau == second.tau:
                raise TrackError("Duplicate portion label {}".format(
                    first.tau))
            if (first.contains(second.span[0], length) or
                    second.contains(first.span[0], length)):
                raise TrackError("Portions {} and {} overlap".format(
                    first.tau, second.tau))


def load_track_csv(path):
    """Read `x_m,y_m,w_tr_left_m,w_tr_right_m` rows.

    :return: `(waypoints, widths)` arrays of shape `(n, 2)`.
    :raises TrackError: If the file is malformed.
    """
    header, rows = utils.read_csv(path)
    if header[:4] != TRACK_CSV_HEADER:
        raise TrackError("{}: expected header {}".format(
            path, ','.join(TRACK_CSV_HEADER)))
    try:
        data = np.array([[float(cell) for cell in row[:4]] for row in rows])
    except (ValueError, IndexError):
        raise TrackError("{}: malformed row".format(path))
    if data.ndim != 2 or data.shape[1] != 4:
        raise TrackError("{}: no waypoints".format(path))
    return data[:, :2], data[:, 2:]


def load_portions_csv(path):
    """Read `tau,kind,theta_a,theta_b,corridor_a,corridor_b` rows.

    Optional `anchor` and `box_half_length` columns override the grid
    defaults.
    """
    header, rows = utils.read_csv(path)
    if header[:len(PORTION_CSV_HEADER)] != PORTION_CSV_HEADER:
        raise TrackError("{}: expected header {}".format(
            path, ','.join(PORTION_CSV_HEADER)))
    portions = []
    for row in rows:
        values = dict(zip(header, row))
        try:
            portions.append(PortionSpec(
                int(values['tau']), values['kind'],
                (float(values['theta_a']), float(values['theta_b'])),
                (float(values['corridor_a']), float(values['corridor_b'])),
                anchor=_optional_float(values.get('anchor')),
                box_half_length=_optional_float(
                    values.get('box_half_length'))))
        except (KeyError, ValueError) as e:
            raise TrackError("{}: malformed portion row {}: {}".format(
                path, row, e))
    return portions


def _optional_float(value):
    return float(value) if value not in (None, '') else None


def save_track_bundle(track, portions, path):
    """Write the build inputs, portions and diagnostics as stable JSON."""
    document = {
        'schema': TRACK_BUNDLE_SCHEMA,
        'waypoints': track.waypoints,
        'widths': track.widths,
        'lut_step': track.lut_step,
        'margin': track.margin,
        'portions': [portion.as_dict() for portion in portions],
        'diagnostics': track_diagnostics(track),
    }
    with open(str(path), 'w') as fp:
        fp.write(utils.dumps_stable(document, indent=1) + '\n')


def load_track_bundle(path):
    """Rebuild the track and portions saved by `save_track_bundle`.

    :return: `(track, portions)`
    :raises TrackError: If the bundle is malformed.
    """
    try:
        with open(str(path)) as fp:
            document = json.load(fp)
        if document.get('schema') != TRACK_BUNDLE_SCHEMA:
            raise TrackError("{}: unsupported track bundle schema {!r}".format(
                path, document.get('schema')))
        track = build_track(document['waypoints'], document['widths'],
                            lut_step=document['lut_step'],
                            margin=document['margin'])
        portions = [PortionSpec.from_dict(data)
                    for data in document['portions']]
    except (ValueError, KeyError, TypeError) as e:
        raise TrackError("{}: malformed track bundle: {}".format(path, e))
    return track, portions
