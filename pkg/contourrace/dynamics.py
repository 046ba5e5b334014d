"""Single-track bicycle model with Pacejka tire forces.

States and inputs are numpy arrays whose last axis holds the components in
the order of `STATE_FIELDS` and `INPUT_FIELDS`; every function broadcasts over
the leading axes so whole horizons are evaluated in one call.
"""
import numpy as np

from . import config
from .exceptions import ConfigError, DegenerateVelocityError

__all__ = ['VehicleState', 'ControlInput', 'VehicleParams', 'slip_angles',
           'tire_and_drive_forces', 'derivative', 'jacobians', 'integrate',
           'steady_state_drive', 'steady_state_steering']

STATE_FIELDS = ('x', 'y', 'phi', 'vx', 'vy', 'omega', 'd', 'delta', 'theta')
INPUT_FIELDS = ('u_d_dot', 'u_delta_dot', 'u_theta_dot')
NX = len(STATE_FIELDS)
NU = len(INPUT_FIELDS)

X, Y, PHI, VX, VY, OMEGA, D, DELTA, THETA = range(NX)


class _Vector(object):
    """A named view over a fixed-size float vector."""

    FIELDS = ()

    def __init__(self, *values, **named):
        if values and named:
            raise TypeError("Pass either positional or named components")
        if named:
            values = [named.pop(name, 0.0) for name in self.FIELDS]
            if named:
                raise TypeError("Unknown components: {}".format(
                    ', '.join(sorted(named))))
        elif len(values) == 1 and np.ndim(values[0]) == 1:
            values = values[0]
        vector = np.array(values, dtype=float)
        if vector.shape != (len(self.FIELDS),):
            raise ValueError("{} needs {} components, got shape {}".format(
                type(self).__name__, len(self.FIELDS), vector.shape))
        self.__dict__['vector'] = vector

    def __getattr__(self, name):
        if name not in self.FIELDS:
            raise AttributeError(name)
        return float(self.__dict__['vector'][self.FIELDS.index(name)])

    def __setattr__(self, name, value):
        raise AttributeError("{} is immutable".format(type(self).__name__))

    def __reduce__(self):
        return type(self), (self.vector.tolist(),)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.vector, dtype=dtype)

    def __eq__(self, other):
        return (type(self) is type(other) and
                np.array_equal(self.vector, other.vector))

    def __hash__(self):
        return hash(self.vector.tobytes())

    def replace(self, **changes):
        vector = self.vector.copy()
        for name, value in changes.items():
            vector[self.FIELDS.index(name)] = value
        return type(self)(vector)

    def as_dict(self):
        return {name: float(value)
                for name, value in zip(self.FIELDS, self.vector)}

    def __repr__(self):
        return '<{}: {}>'.format(type(self).__name__, ' '.join(
            '{}={:.4g}'.format(name, value)
            for name, value in zip(self.FIELDS, self.vector)))


class VehicleState(_Vector):
    """The augmented 9-component state of the car.

    Position and heading live in the world frame, velocities and yaw rate in
    the body frame; `d` is the integrated drive command, `delta` the steering
    angle and `theta` the progress parameter along the track.
    """

    FIELDS = STATE_FIELDS


class ControlInput(_Vector):
    """Rates of the drive command, the steering angle and the progress."""

    FIELDS = INPUT_FIELDS


class VehicleParams(object):
    """Physical parameters of the single-track model.

    Use `VehicleParams.from_config()` for the configured set or
    `VehicleParams.from_file()` for a key-value parameter file.
    """

    KEYS = tuple(config.DEFAULT_VEHICLE)

    def __init__(self, **values):
        missing = set(self.KEYS) - set(values)
        unknown = set(values) - set(self.KEYS)
        if missing or unknown:
            raise ConfigError(
                "Vehicle parameters: missing {}, unknown {}".format(
                    sorted(missing), sorted(unknown)))
        for key in self.KEYS:
            setattr(self, key, float(values[key]))
        positive = ['m', 'Iz', 'lf', 'lr', 'Bf', 'Cf', 'Df', 'Br', 'Cr', 'Dr']
        invalid = [key for key in positive if not getattr(self, key) > 0]
        if invalid:
            raise ConfigError("Vehicle parameters must be positive: {}".format(
                ', '.join(invalid)))
        if not self.vx_min > 0:
            raise ConfigError("vx_min must be positive")

    @classmethod
    def from_config(cls):
        return cls(**config.VEHICLE)

    @classmethod
    def from_file(cls, path):
        values = config.load_key_values(path, allowed=cls.KEYS)
        return cls(**config.merge_defaults(values, config.DEFAULT_VEHICLE))

    def as_dict(self):
        return {key: getattr(self, key) for key in self.KEYS}

    def __eq__(self, other):
        return isinstance(other, VehicleParams) and \
            self.as_dict() == other.as_dict()

    def __repr__(self):
        return '<VehicleParams: m={} Iz={} lf={} lr={}>'.format(
            self.m, self.Iz, self.lf, self.lr)


def _check_velocity(vx, params):
    if np.any(np.asarray(vx) <= params.vx_min):
        raise DegenerateVelocityError(
            "Longitudinal velocity {} is at or below vx_min={}".format(
                np.min(vx), params.vx_min))


def slip_angles(state, params):
    """Return the front and rear slip angles `(alpha_f, alpha_r)` in rad.

    :raises DegenerateVelocityError: If `vx <= params.vx_min`.
    """
    state = np.asarray(state, dtype=float)
    vx, vy, omega = state[..., VX], state[..., VY], state[..., OMEGA]
    _check_velocity(vx, params)
    alpha_f = -np.arctan((omega * params.lf + vy) / vx) + state[..., DELTA]
    alpha_r = np.arctan((omega * params.lr - vy) / vx)
    return alpha_f, alpha_r


def tire_and_drive_forces(state, alpha_f, alpha_r, params):
    """Return the lateral tire forces and the rear drive force in N."""
    state = np.asarray(state, dtype=float)
    vx, d = state[..., VX], state[..., D]
    ffy = params.Df * np.sin(params.Cf * np.arctan(params.Bf * alpha_f))
    fry = params.Dr * np.sin(params.Cr * np.arctan(params.Br * alpha_r))
    frx = (params.Cm1 - params.Cm2 * vx) * d - params.Croll - params.Cd * vx**2
    return ffy, fry, frx


def derivative(state, control, params):
    """Evaluate the continuous-time dynamics.

    :param state: A state (or a stack of states) of 9 components.
    :param control: The input (or a stack of inputs) of 3 components.
    :param VehicleParams params: Physical parameters.
    :return: Time derivatives with the shape of `state`.

    :raises DegenerateVelocityError: If `vx <= params.vx_min`.
    """
    state = np.asarray(state, dtype=float)
    control = np.asarray(control, dtype=float)
    alpha_f, alpha_r = slip_angles(state, params)
    ffy, fry, frx = tire_and_drive_forces(state, alpha_f, alpha_r, params)

    phi, vx, vy = state[..., PHI], state[..., VX], state[..., VY]
    omega, delta = state[..., OMEGA], state[..., DELTA]
    cos_phi, sin_phi = np.cos(phi), np.sin(phi)
    cos_delta, sin_delta = np.cos(delta), np.sin(delta)

    rates = np.empty(np.broadcast(state, control[..., :1]).shape[:-1] + (NX,))
    rates[..., X] = vx * cos_phi - vy * sin_phi
    rates[..., Y] = vx * sin_phi + vy * cos_phi
    rates[..., PHI] = omega
    rates[..., VX] = (frx - ffy * sin_delta + params.m * vy * omega) / params.m
    # lateral force balance
    rates[..., VY] = (fry + ffy * cos_delta - params.m * vx * omega) / params.m
    rates[..., OMEGA] = (ffy * params.lf * cos_delta -
                         fry * params.lr) / params.Iz
    rates[..., D] = control[..., 0]
    rates[..., DELTA] = control[..., 1]
    rates[..., THETA] = control[..., 2]
    return rates


def jacobians(state, params):
    """Return the continuous-time Jacobians `(A, B)` of `derivative`.

    `A` has shape `(..., 9, 9)`; `B` is the constant `(9, 3)` input map.
    """
    state = np.asarray(state, dtype=float)
    phi, vx, vy = state[..., PHI], state[..., VX], state[..., VY]
    omega, d, delta = state[..., OMEGA], state[..., D], state[..., DELTA]
    _check_velocity(vx, params)
    m, lf, lr, iz = params.m, params.lf, params.lr, params.Iz

    q_f = (omega * lf + vy) / vx
    q_r = (omega * lr - vy) / vx
    w_f = 1.0 / (1.0 + q_f**2)
    w_r = 1.0 / (1.0 + q_r**2)
    alpha_f = -np.arctan(q_f) + delta
    alpha_r = np.arctan(q_r)
    # Partial derivatives of the slip angles
    af_vx = w_f * (omega * lf + vy) / vx**2
    af_vy = -w_f / vx
    af_omega = -w_f * lf / vx
    ar_vx = -w_r * (omega * lr - vy) / vx**2
    ar_vy = -w_r / vx
    ar_omega = w_r * lr / vx

    ffy, fry, frx = tire_and_drive_forces(state, alpha_f, alpha_r, params)
    bf_alpha = params.Bf * alpha_f
    br_alpha = params.Br * alpha_r
    dffy = (params.Df * np.cos(params.Cf * np.arctan(bf_alpha)) *
            params.Cf * params.Bf / (1.0 + bf_alpha**2))
    dfry = (params.Dr * np.cos(params.Cr * np.arctan(br_alpha)) *
            params.Cr * params.Br / (1.0 + br_alpha**2))
    frx_vx = -params.Cm2 * d - 2.0 * params.Cd * vx
    frx_d = params.Cm1 - params.Cm2 * vx

    cos_phi, sin_phi = np.cos(phi), np.sin(phi)
    cos_delta, sin_delta = np.cos(delta), np.sin(delta)

    a = np.zeros(state.shape[:-1] + (NX, NX))
    a[..., X, PHI] = -vx * sin_phi - vy * cos_phi
    a[..., X, VX] = cos_phi
    a[..., X, VY] = -sin_phi
    a[..., Y, PHI] = vx * cos_phi - vy * sin_phi
    a[..., Y, VX] = sin_phi
    a[..., Y, VY] = cos_phi
    a[..., PHI, OMEGA] = 1.0

    a[..., VX, VX] = (frx_vx - sin_delta * dffy * af_vx) / m
    a[..., VX, VY] = -sin_delta * dffy * af_vy / m + omega
    a[..., VX, OMEGA] = -sin_delta * dffy * af_omega / m + vy
    a[..., VX, D] = frx_d / m
    a[..., VX, DELTA] = (-sin_delta * dffy - ffy * cos_delta) / m

    a[..., VY, VX] = (dfry * ar_vx + cos_delta * dffy * af_vx) / m - omega
    a[..., VY, VY] = (dfry * ar_vy + cos_delta * dffy * af_vy) / m
    a[..., VY, OMEGA] = (dfry * ar_omega +
                         cos_delta * dffy * af_omega) / m - vx
    a[..., VY, DELTA] = (cos_delta * dffy - ffy * sin_delta) / m

    a[..., OMEGA, VX] = (lf * cos_delta * dffy * af_vx -
                         lr * dfry * ar_vx) / iz
    a[..., OMEGA, VY] = (lf * cos_delta * dffy * af_vy -
                         lr * dfry * ar_vy) / iz
    a[..., OMEGA, OMEGA] = (lf * cos_delta * dffy * af_omega -
                            lr * dfry * ar_omega) / iz
    a[..., OMEGA, DELTA] = lf * (cos_delta * dffy - sin_delta * ffy) / iz

    b = np.zeros((NX, NU))
    b[D, 0] = b[DELTA, 1] = b[THETA, 2] = 1.0
    return a, b


def integrate(state, control, params, dt):
    """Advance the state by one classical Runge-Kutta step.

    The input is held constant over the step.

    :raises DegenerateVelocityError: If any stage hits `vx <= vx_min`.
    """
    if not dt > 0:
        raise ValueError("dt must be positive, got {}".format(dt))
    state = np.asarray(state, dtype=float)
    k1 = derivative(state, control, params)
    k2 = derivative(state + 0.5 * dt * k1, control, params)
    k3 = derivative(state + 0.5 * dt * k2, control, params)
    k4 = derivative(state + dt * k3, control, params)
    return state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_sensitivities(state, control, params, dt):
    """Return the RK4 step and its exact Jacobians `(next, A, B)`.

    Broadcasts over leading axes like `integrate`.
    """
    state = np.asarray(state, dtype=float)
    control = np.asarray(control, dtype=float)
    eye = np.eye(NX)

    k1 = derivative(state, control, params)
    a1, b = jacobians(state, params)
    dk1_dx, dk1_du = a1, np.broadcast_to(b, a1.shape[:-2] + b.shape)

    stage = state + 0.5 * dt * k1
    k2 = derivative(stage, control, params)
    a2, _ = jacobians(stage, params)
    dk2_dx = a2 @ (eye + 0.5 * dt * dk1_dx)
    dk2_du = 0.5 * dt * (a2 @ dk1_du) + b

    stage = state + 0.5 * dt * k2
    k3 = derivative(stage, control, params)
    a3, _ = jacobians(stage, params)
    dk3_dx = a3 @ (eye + 0.5 * dt * dk2_dx)
    dk3_du = 0.5 * dt * (a3 @ dk2_du) + b

    stage = state + dt * k3
    k4 = derivative(stage, control, params)
    a4, _ = jacobians(stage, params)
    dk4_dx = a4 @ (eye + dt * dk3_dx)
    dk4_du = dt * (a4 @ dk3_du) + b

    following = state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    a = eye + dt / 6.0 * (dk1_dx + 2.0 * dk2_dx + 2.0 * dk3_dx + dk4_dx)
    b = dt / 6.0 * (dk1_du + 2.0 * dk2_du + 2.0 * dk3_du + dk4_du)
    return following, a, b


def steady_state_drive(vx, params):
    """Drive command that balances drag and rolling resistance at `vx`."""
    drive = (params.Croll + params.Cd * vx**2) / (params.Cm1 - params.Cm2 * vx)
    return float(np.clip(drive, 0.0, 1.0))


def steady_state_steering(kappa, params):
    """Kinematic steering angle that follows a path of curvature `kappa`."""
    return float(np.arctan((params.lf + params.lr) * kappa))
