import itertools
import math

import numpy as np

from contourrace.dynamics import VehicleState, steady_state_drive
from contourrace.experiments import TrialRecord
from contourrace.track import Region, left_normal, lookup


def circle_waypoints(radius, count):
    """Counterclockwise circle starting at `(radius, 0)`."""
    angles = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([radius * np.cos(angles),
                            radius * np.sin(angles)])


def scalar_slip_angles(state, p):
    x, y, phi, vx, vy, omega, d, delta, theta = state
    alpha_f = -math.atan((omega * p.lf + vy) / vx) + delta
    alpha_r = math.atan((omega * p.lr - vy) / vx)
    return alpha_f, alpha_r


def scalar_derivative(state, control, p):
    """The single-track model written out with `math`, one state at a
    time."""
    x, y, phi, vx, vy, omega, d, delta, theta = state
    alpha_f, alpha_r = scalar_slip_angles(state, p)
    ffy = p.Df * math.sin(p.Cf * math.atan(p.Bf * alpha_f))
    fry = p.Dr * math.sin(p.Cr * math.atan(p.Br * alpha_r))
    frx = (p.Cm1 - p.Cm2 * vx) * d - p.Croll - p.Cd * vx * vx
    return [
        vx * math.cos(phi) - vy * math.sin(phi),
        vx * math.sin(phi) + vy * math.cos(phi),
        omega,
        (frx - ffy * math.sin(delta) + p.m * vy * omega) / p.m,
        (fry + ffy * math.cos(delta) - p.m * vx * omega) / p.m,
        (ffy * p.lf * math.cos(delta) - fry * p.lr) / p.Iz,
        control[0],
        control[1],
        control[2],
    ]


def finite_difference(func, point, step=1e-6):
    """Central-difference Jacobian of `func` at `point`."""
    point = np.asarray(point, dtype=float)
    columns = []
    for i in range(len(point)):
        offset = np.zeros_like(point)
        offset[i] = step * max(1.0, abs(point[i]))
        columns.append((np.asarray(func(point + offset)) -
                        np.asarray(func(point - offset))) /
                       (2.0 * offset[i]))
    return np.column_stack(columns)


def project_brute_force(track, x, y, step=0.01):
    """Closest spline parameter by dense sampling."""
    thetas = np.arange(0.0, track.length, step)
    points = track.spline(thetas)
    distances = (points[:, 0] - x)**2 + (points[:, 1] - y)**2
    return float(thetas[np.argmin(distances)])


def qp_by_active_sets(H, f, G, h, A=None, b=None):
    """Minimize a strictly convex QP by trying every active set.

    Only usable for a handful of inequalities.
    """
    H, f, G, h = (np.asarray(v, dtype=float) for v in (H, f, G, h))
    n = len(f)
    A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float)
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float)
    best_z, best_value = None, np.inf
    for size in range(min(len(h), n - len(b)) + 1):
        for active in itertools.combinations(range(len(h)), size):
            active = list(active)
            C = np.vstack([A, G[active]])
            d = np.concatenate([b, h[active]])
            m = len(d)
            kkt = np.block([[H, C.T], [C, np.zeros((m, m))]])
            try:
                solution = np.linalg.solve(kkt, np.concatenate([-f, d]))
            except np.linalg.LinAlgError:
                continue
            z, multipliers = solution[:n], solution[n + len(b):]
            if np.any(G @ z > h + 1e-9) or np.any(multipliers < -1e-9) \
                    or np.any(np.abs(A @ z - b) > 1e-9):
                continue
            value = 0.5 * z @ H @ z + f @ z
            if value < best_value:
                best_z, best_value = z, value
    return best_z, best_value


def state_on_track(track, theta, offset=0.0, speed=15.0, params=None):
    """A straight-running state `offset` meters left of the centerline."""
    ref = lookup(track, theta)
    x, y = (np.array([ref.x_t, ref.y_t]) +
            offset * left_normal(ref.phi_t))
    drive = steady_state_drive(speed, params) if params else 0.1
    return VehicleState(x, y, ref.phi_t, speed, 0.0, 0.0, drive, 0.0,
                        ref.theta)


def make_record(tau=1, index=0, region=Region.R1, overtake=False,
                valid=True, failed=False, speed_scale=0.0,
                kind='straight'):
    return TrialRecord(tau=tau, kind=kind, index=index, lateral=0.15,
                       longitudinal=0.2, speed_scale=speed_scale,
                       region=region, valid=valid, overtake=overtake,
                       overtake_time=1.0 if overtake else None,
                       failed=failed, failure='boom' if failed else None,
                       steps=10, fallbacks=0, max_slack=0.0,
                       boundary_violations=0, min_gap=5.0, modes=[],
                       log=[])
