import csv
import io
import json
import math

import numpy as np

#: Floats in logged payloads are cut to this many leading items.
MAX_LOGGED_ITEMS = 6


def wrap_angle(angle):
    """Wrap an angle (or an array of angles) to `[-pi, pi)`."""
    return (np.asarray(angle) + np.pi) % (2.0 * np.pi) - np.pi


def progress_delta(theta, reference, length):
    """Signed progress from `reference` to `theta` on a loop of `length`.

    The result lies in `[-length / 2, length / 2)`, so comparisons across the
    start/finish seam behave as on an unrolled track.
    """
    half = 0.5 * length
    return (np.asarray(theta) - reference + half) % length - half


def unwrap_progress(theta, reference, length):
    """Return the copy of `theta` (mod `length`) closest to `reference`."""
    return reference + progress_delta(theta, reference, length)


def to_builtin(value):
    """Convert numpy scalars and arrays into JSON-friendly builtins."""
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if hasattr(value, 'value') and hasattr(value, 'name'):
        return value.value
    return value


def dumps_stable(document, indent=None):
    """Serialize to JSON with sorted keys and full float precision.

    The output only depends on the document, so repeated runs produce
    byte-identical files.
    """
    return json.dumps(to_builtin(document), sort_keys=True, indent=indent,
                      separators=(',', ':') if indent is None else (',', ': '),
                      allow_nan=False)


def write_csv(path, header, rows):
    """Write rows with `repr` float formatting and Unix line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(cell) for cell in row])
    with open(str(path), 'w', newline='') as fp:
        fp.write(buffer.getvalue())


def _format_cell(cell):
    if cell is None:
        return ''
    if isinstance(cell, (float, np.floating)):
        return repr(float(cell))
    return cell


def read_csv(path):
    """Read a headed CSV file into `(header, rows)`.

    A leading `#` on the header line is ignored.
    """
    with open(str(path), newline='') as fp:
        lines = [line for line in fp.read().splitlines() if line.strip()]
    if not lines:
        return [], []
    lines[0] = lines[0].lstrip('#').strip()
    reader = csv.reader(lines)
    header = [name.strip() for name in next(reader)]
    rows = [[cell.strip() for cell in row] for row in reader]
    return header, rows


def truncate_result(result):
    """Shorten long sequences in a dict so it can be logged."""
    truncated = {}
    for k, v in result.items():
        if isinstance(v, np.ndarray):
            v = v.ravel().tolist()
        if isinstance(v, (list, tuple)) and len(v) > MAX_LOGGED_ITEMS:
            v = list(v[:MAX_LOGGED_ITEMS]) + ['*** truncated ***']
        truncated[k] = v
    return truncated


def render_svg(centerline, left, right, trajectories, margin=10.0,
               width=800):
    """Render track boundaries and trajectories as an SVG document.

    :param centerline: `(n, 2)` closed centerline samples.
    :param left: `(n, 2)` left boundary samples.
    :param right: `(n, 2)` right boundary samples.
    :param trajectories: A list of `(points, color)` pairs.
    :return str: The SVG text.
    """
    everything = np.vstack([centerline, left, right] +
                           [np.asarray(points).reshape(-1, 2)
                            for points, _ in trajectories])
    x_min, y_min = everything.min(axis=0) - margin
    x_max, y_max = everything.max(axis=0) + margin
    scale = width / max(x_max - x_min, 1e-9)
    height = int(math.ceil((y_max - y_min) * scale))

    def polyline(points, color, stroke, closed=False, dash=None):
        points = np.asarray(points).reshape(-1, 2)
        if closed and len(points):
            points = np.vstack([points, points[:1]])
        coords = ' '.join('{:.2f},{:.2f}'.format(
            (px - x_min) * scale, (y_max - py) * scale) for px, py in points)
        extra = ' stroke-dasharray="{}"'.format(dash) if dash else ''
        return ('<polyline points="{}" fill="none" stroke="{}" '
                'stroke-width="{}"{}/>'.format(coords, color, stroke, extra))

    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" '
        'viewBox="0 0 {} {}">'.format(width, height, width, height),
        '<rect width="100%" height="100%" fill="white"/>',
        polyline(left, 'black', 1.5, closed=True),
        polyline(right, 'black', 1.5, closed=True),
        polyline(centerline, 'gray', 0.8, closed=True, dash='4,4'),
    ]
    parts.extend(polyline(points, color, 2.0)
                 for points, color in trajectories)
    parts.append('</svg>')
    return '\n'.join(parts) + '\n'
