"""Model predictive contouring control.

Every planner call transcribes the horizon by direct multiple shooting::

    z = [x_0 .. x_N, u_0 .. u_{N-1}, sigma_0 .. sigma_N, xi_0 .. xi_N]

linearizes the RK4 dynamics and the track, obstacle and mode constraints
about the current guess, and solves the resulting QP with
`contourrace.solver`. A few damped SQP iterations refine the guess, and the
solution is shifted one step to warm start the next call.

`sigma` softens the mode half-plane. `xi` softens the track slab, the
obstacle half-plane and the velocity bounds, so the subproblem stays
feasible when the car arrives too fast to stay inside them. Both slacks
carry an L1 plus quadratic penalty; `xi` is weighted far above `sigma`.
"""
import collections
import enum

import numpy as np
import scipy.sparse as sp
import structlog

from . import config as settings
from . import dynamics, solver, utils
from .dynamics import NU, NX, X, Y, VX, VY, OMEGA, D, DELTA, THETA
from .exceptions import ConfigError, DegenerateVelocityError
from .track import (contouring_errors, left_normal, linearized_errors,
                    lookup, lookup_many)

__all__ = ['Mode', 'MpccConfig', 'MpccSolution', 'Halfspace',
           'StageCost', 'StageConstraints', 'Planner',
           'discretize_linearize', 'stage_cost', 'constraints',
           'assemble_qp', 'solve_qp', 'plan', 'cold_start',
           'shift_warmstart', 'fallback_input', 'mode_violation',
           'linearized_errors']

logger = structlog.get_logger()

MIN_DAMPING = 0.125
PROXIMAL_WEIGHT = 1e-4
BRAKE_OFF = 0.2
#: States whose box bounds share the safety slack.
SOFT_STATES = (VX, VY, OMEGA)
#: Slack below this is solver noise.
SLACK_NOISE = 1e-4


class Mode(enum.Enum):
    NORMAL = 'Normal'
    DRIVE_LEFT = 'DriveLeft'
    DRIVE_RIGHT = 'DriveRight'


class MpccConfig(object):
    """Horizon, weights, bounds and iteration limits of the controller.

    Keys are those of `config.DEFAULT_SOLVER`; missing keys take the
    configured values.
    """

    KEYS = tuple(settings.DEFAULT_SOLVER)

    def __init__(self, **values):
        merged = settings.merge_defaults(values, settings.SOLVER)
        self.N = int(merged['N'])
        self.dt = float(merged['dt'])
        self.Qc = float(merged['Qc'])
        self.Ql = float(merged['Ql'])
        self.Qtheta = float(merged['Qtheta'])
        self.R = np.array([merged['R_d'], merged['R_delta'],
                           merged['R_theta']], dtype=float)
        self.slack_weight = float(merged['slack_weight'])
        self.slack_budget = float(merged['slack_budget'])
        self.safety_weight = float(merged['safety_weight'])
        self.sqp_iters = int(merged['sqp_iters'])
        self.sqp_step_tol = float(merged['sqp_step_tol'])
        self.kkt_tol = float(merged['kkt_tol'])
        self.qp_max_iter = int(merged['qp_max_iter'])
        self.obstacle_radius = float(merged['obstacle_radius'])
        self.track_margin = float(merged['track_margin'])
        self.x_lower = np.array(merged['x_lower'], dtype=float)
        self.x_upper = np.array(merged['x_upper'], dtype=float)
        self.u_lower = np.array(merged['u_lower'], dtype=float)
        self.u_upper = np.array(merged['u_upper'], dtype=float)
        self._validate()

    def _validate(self):
        if self.N < 2:
            raise ConfigError("The horizon N must be at least 2")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        weights = [self.Qc, self.Ql, self.Qtheta, self.slack_weight,
                   self.safety_weight]
        if min(weights) < 0 or np.any(self.R < 0):
            raise ConfigError("Cost weights must be nonnegative")
        if self.sqp_iters < 1 or self.qp_max_iter < 1:
            raise ConfigError("Iteration limits must be positive")
        if self.x_lower.shape != (NX,) or self.u_lower.shape != (NU,):
            raise ConfigError("Bound vectors have the wrong length")
        if np.any(self.x_lower > self.x_upper) or \
                np.any(self.u_lower > self.u_upper):
            raise ConfigError("Lower bounds exceed upper bounds")
        if self.obstacle_radius < 0 or self.track_margin < 0 or \
                self.slack_budget < 0:
            raise ConfigError("Radii, margins and budgets must be "
                              "nonnegative")

    @classmethod
    def from_config(cls):
        return cls(**settings.SOLVER)

    @classmethod
    def from_file(cls, path):
        return cls(**settings.load_key_values(path, allowed=cls.KEYS))

    def as_dict(self):
        return {
            'N': self.N, 'dt': self.dt, 'Qc': self.Qc, 'Ql': self.Ql,
            'Qtheta': self.Qtheta, 'R_d': self.R[0], 'R_delta': self.R[1],
            'R_theta': self.R[2], 'slack_weight': self.slack_weight,
            'slack_budget': self.slack_budget,
            'safety_weight': self.safety_weight, 'sqp_iters': self.sqp_iters,
            'sqp_step_tol': self.sqp_step_tol, 'kkt_tol': self.kkt_tol,
            'qp_max_iter': self.qp_max_iter,
            'obstacle_radius': self.obstacle_radius,
            'track_margin': self.track_margin,
            'x_lower': self.x_lower.tolist(),
            'x_upper': self.x_upper.tolist(),
            'u_lower': self.u_lower.tolist(),
            'u_upper': self.u_upper.tolist(),
        }

    def replace(self, **changes):
        values = self.as_dict()
        values.update(changes)
        return MpccConfig(**values)

    def __repr__(self):
        return '<MpccConfig: N={} dt={} Qc={} Ql={} Qtheta={}>'.format(
            self.N, self.dt, self.Qc, self.Ql, self.Qtheta)


class MpccSolution(object):
    """The outcome of one planner call.

    `states` and `inputs` hold the predicted horizon, `warmstart` the
    shifted guess for the next call. `slack` is the mode slack per stage and
    `safety_slack` the track, obstacle and velocity slack. `converged` is
    false when the SQP ran out of iterations before its step fell below
    `sqp_step_tol`. `problem` and `z` are the last QP and its primal
    solution, kept so feasibility can be audited.
    """

    def __init__(self, states, inputs, slack, status, kkt_residual,
                 objective, mode, warmstart, theta_gaps=(), objectives=(),
                 problem=None, z=None, safety_slack=None, converged=True):
        self.states = states
        self.inputs = inputs
        self.slack = slack
        if safety_slack is None:
            safety_slack = np.zeros_like(slack)
        self.safety_slack = safety_slack
        self.converged = converged
        self.status = status
        self.kkt_residual = kkt_residual
        self.objective = objective
        self.mode = mode
        self.warmstart = warmstart
        self.theta_gaps = list(theta_gaps)
        self.objectives = list(objectives)
        self.problem = problem
        self.z = z

    @property
    def u_star(self):
        return dynamics.ControlInput(self.inputs[0])

    @property
    def slack_used(self):
        return float(np.max(self.slack, initial=0.0))

    @property
    def safety_slack_used(self):
        return float(np.max(self.safety_slack, initial=0.0))

    @property
    def usable(self):
        return self.status is not solver.SolveStatus.INFEASIBLE

    def summary(self):
        return utils.truncate_result({
            'status': self.status.value,
            'mode': self.mode.value,
            'kkt_residual': self.kkt_residual,
            'objective': self.objective,
            'slack_used': self.slack_used,
            'safety_slack_used': self.safety_slack_used,
            'converged': self.converged,
            'theta_gaps': self.theta_gaps,
        })

    def __repr__(self):
        return '<MpccSolution: {} mode={} objective={:.4g}>'.format(
            self.status.value, self.mode.value, self.objective)


#: `normal @ state <= bound` on one stage's state.
Halfspace = collections.namedtuple('Halfspace', 'normal bound kind')

StageConstraints = collections.namedtuple(
    'StageConstraints', 'stage halfspaces mode_row')


class StageCost(collections.namedtuple('StageCost', 'P q constant R r')):
    """`1/2 x'Px + q'x + constant + 1/2 u'Ru + r'u` for one stage."""

    def evaluate(self, state, control):
        state = np.asarray(state, dtype=float)
        control = np.asarray(control, dtype=float)
        return float(0.5 * state @ self.P @ state + self.q @ state +
                     self.constant + 0.5 * control @ self.R @ control +
                     self.r @ control)


class _Layout(object):
    def __init__(self, horizon):
        self.N = horizon
        self.n_states = (horizon + 1) * NX
        self.n_inputs = horizon * NU
        self.size = self.n_states + self.n_inputs + 2 * (horizon + 1)

    def state(self, k):
        return k * NX

    def input(self, k):
        return self.n_states + k * NU

    def slack(self, k):
        return self.n_states + self.n_inputs + k

    def safety(self, k):
        return self.slack(self.N + 1 + k)

    def pack(self, states, inputs):
        return np.concatenate([np.ravel(states), np.ravel(inputs),
                               np.zeros(2 * (self.N + 1))])

    def unpack(self, z):
        """Split `z` into `(states, inputs, slack, safety_slack)`."""
        states = z[:self.n_states].reshape(self.N + 1, NX)
        inputs = z[self.n_states:self.n_states + self.n_inputs].reshape(
            self.N, NU)
        start = self.slack(0)
        return (states, inputs, z[start:start + self.N + 1],
                z[start + self.N + 1:])


def discretize_linearize(x_ref, u_ref, params, dt):
    """Affine model `x+ ~ A x + B u + g` of the RK4 step about a reference.

    Broadcasts over stacked references.

    :raises DegenerateVelocityError: If `vx <= params.vx_min`.
    """
    x_ref = np.asarray(x_ref, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    following, a, b = dynamics.integrate_sensitivities(x_ref, u_ref, params,
                                                       dt)
    g = following - np.einsum('...ij,...j->...i', a, x_ref) - \
        np.einsum('...ij,...j->...i', b, u_ref)
    return a, b, g


def stage_cost(track, theta_hat, config):
    """Quadratic contouring, lag, progress and input cost of one stage.

    The errors are linearized about the centerline point at `theta_hat`.
    """
    ref = lookup(track, theta_hat)
    cos_phi, sin_phi = np.cos(ref.phi_t), np.sin(ref.phi_t)
    contour = np.zeros(NX)
    contour[X], contour[Y] = -sin_phi, cos_phi
    contour_offset = sin_phi * ref.x_t - cos_phi * ref.y_t
    lag = np.zeros(NX)
    lag[X], lag[Y], lag[THETA] = -cos_phi, -sin_phi, 1.0
    lag_offset = cos_phi * ref.x_t + sin_phi * ref.y_t - theta_hat

    P = 2.0 * (config.Qc * np.outer(contour, contour) +
               config.Ql * np.outer(lag, lag))
    q = 2.0 * (config.Qc * contour_offset * contour +
               config.Ql * lag_offset * lag)
    constant = (config.Qc * contour_offset**2 +
                config.Ql * lag_offset**2)
    r = np.array([0.0, 0.0, -config.Qtheta * config.dt])
    return StageCost(P, q, constant, np.diag(2.0 * config.R), r)


def _track_halfspaces(track, state, margin):
    ref = lookup(track, state[THETA])
    tangent = np.array([np.cos(ref.phi_t), np.sin(ref.phi_t)])
    offset = np.array([state[X] - ref.x_t, state[Y] - ref.y_t])
    norm = np.hypot(*offset)
    normal = offset / norm if norm > 1e-6 else left_normal(ref.phi_t)
    # The linearized center moves along the tangent with theta
    row = np.zeros(NX)
    row[X], row[Y] = normal
    row[THETA] = -normal @ tangent
    center = normal @ np.array([ref.x_t, ref.y_t]) + row[THETA] * state[THETA]
    reach = ref.r - margin
    return [Halfspace(row, reach + center, 'track'),
            Halfspace(-row, reach - center, 'track')]


def _obstacle_halfspace(track, state, center, radius):
    away = np.array([state[X] - center[0], state[Y] - center[1]])
    norm = np.hypot(*away)
    if norm > 1e-6:
        normal = away / norm
    else:
        normal = left_normal(lookup(track, state[THETA]).phi_t)
    row = np.zeros(NX)
    row[X], row[Y] = -normal
    return Halfspace(row, -radius - normal @ np.asarray(center), 'obstacle')


def _mode_halfspace(track, state, mode):
    ref = lookup(track, state[THETA])
    cos_phi, sin_phi = np.cos(ref.phi_t), np.sin(ref.phi_t)
    # eps_c = offset - sin(phi) x + cos(phi) y about the warmstart point
    row = np.zeros(NX)
    row[X], row[Y] = -sin_phi, cos_phi
    offset = sin_phi * ref.x_t - cos_phi * ref.y_t
    if mode is Mode.DRIVE_LEFT:
        return Halfspace(-row, offset, 'mode')
    return Halfspace(row, -offset, 'mode')


def constraints(track, mode, obstacle_pred, warmstart, config):
    """Linearize the per-stage constraints about the warmstart states.

    Stage 0 is pinned to the current state and gets no constraints. When
    the QP is assembled the mode row is softened with the stage's mode
    slack (`row @ x - sigma <= bound`) and the track and obstacle rows with
    its safety slack (`row @ x - xi <= bound`).

    :param obstacle_pred: `(N + 1, 2)` predicted obstacle centers or `None`.
    :param warmstart: `(N + 1, 9)` states the constraints are linearized
                      about.
    :return: A list of `StageConstraints`, one per stage.
    """
    warmstart = np.asarray(warmstart, dtype=float)
    if obstacle_pred is not None:
        obstacle_pred = np.asarray(obstacle_pred, dtype=float)
        if obstacle_pred.shape[0] != config.N + 1:
            raise ValueError("Expected {} obstacle positions, got {}".format(
                config.N + 1, obstacle_pred.shape[0]))
    stages = [StageConstraints(0, [], None)]
    for k in range(1, config.N + 1):
        state = warmstart[k]
        halfspaces = _track_halfspaces(track, state, config.track_margin)
        if obstacle_pred is not None:
            halfspaces.append(_obstacle_halfspace(
                track, state, obstacle_pred[k], config.obstacle_radius))
        mode_row = None
        if mode is not Mode.NORMAL:
            mode_row = _mode_halfspace(track, state, mode)
        stages.append(StageConstraints(k, halfspaces, mode_row))
    return stages


class _Triplets(object):
    """Accumulates a sparse matrix row by row."""

    def __init__(self):
        self.rows, self.cols, self.vals, self.rhs = [], [], [], []

    def add(self, columns, values, bound):
        row = len(self.rhs)
        self.rows.extend([row] * len(columns))
        self.cols.extend(columns)
        self.vals.extend(values)
        self.rhs.append(bound)

    def matrix(self, n):
        shape = (len(self.rhs), n)
        return sp.csc_matrix((self.vals, (self.rows, self.cols)),
                             shape=shape), np.array(self.rhs, dtype=float)


def assemble_qp(track, mode, obstacle_pred, states, inputs, ego, config,
                params):
    """Assemble the horizon QP linearized about `(states, inputs)`.

    :return: `(problem, layout)`
    """
    layout = _Layout(config.N)
    n = layout.size
    a, b, g = discretize_linearize(states[:-1], inputs, params, config.dt)

    equalities = _Triplets()
    for i in range(NX):
        equalities.add([layout.state(0) + i], [1.0], ego[i])
    for k in range(config.N):
        x_cols = list(range(layout.state(k), layout.state(k) + NX))
        u_cols = list(range(layout.input(k), layout.input(k) + NU))
        for i in range(NX):
            equalities.add([layout.state(k + 1) + i] + x_cols + u_cols,
                           [1.0] + list(-a[k, i]) + list(-b[k, i]),
                           g[k, i])

    H = sp.lil_matrix((n, n))
    f = np.zeros(n)
    for k in range(1, config.N + 1):
        cost = stage_cost(track, states[k, THETA], config)
        block = slice(layout.state(k), layout.state(k) + NX)
        H[block, block] = cost.P
        f[block] = cost.q
        # the input leading into stage k
        u_block = slice(layout.input(k - 1), layout.input(k - 1) + NU)
        H[u_block, u_block] = cost.R
        f[u_block] = cost.r
    for k in range(config.N + 1):
        for column, weight in ((layout.slack(k), config.slack_weight),
                               (layout.safety(k), config.safety_weight)):
            H[column, column] = 2.0 * weight
            f[column] = weight
    guess = layout.pack(states, inputs)
    H = sp.csc_matrix(H) + PROXIMAL_WEIGHT * sp.identity(n, format='csc')
    f = f - PROXIMAL_WEIGHT * guess

    inequalities = _Triplets()
    for k in range(1, config.N + 1):
        for i in range(NX):
            column = layout.state(k) + i
            # d and delta are integrated inputs and stay hard
            soft, coefficient = [], []
            if i in SOFT_STATES:
                soft, coefficient = [layout.safety(k)], [-1.0]
            if np.isfinite(config.x_upper[i]):
                inequalities.add([column] + soft, [1.0] + coefficient,
                                 config.x_upper[i])
            if np.isfinite(config.x_lower[i]):
                inequalities.add([column] + soft, [-1.0] + coefficient,
                                 -config.x_lower[i])
    for k in range(config.N):
        for i in range(NU):
            column = layout.input(k) + i
            inequalities.add([column], [1.0], config.u_upper[i])
            inequalities.add([column], [-1.0], -config.u_lower[i])
    for k in range(config.N + 1):
        inequalities.add([layout.slack(k)], [-1.0], 0.0)
        inequalities.add([layout.safety(k)], [-1.0], 0.0)
    state_columns = np.arange(NX)
    for stage in constraints(track, mode, obstacle_pred, states, config):
        columns = list(layout.state(stage.stage) + state_columns)
        for halfspace in stage.halfspaces:
            inequalities.add(columns + [layout.safety(stage.stage)],
                             list(halfspace.normal) + [-1.0],
                             halfspace.bound)
        if stage.mode_row is not None:
            inequalities.add(columns + [layout.slack(stage.stage)],
                             list(stage.mode_row.normal) + [-1.0],
                             stage.mode_row.bound)

    A, b_eq = equalities.matrix(n)
    G, h = inequalities.matrix(n)
    return solver.QpProblem(H, f, A, b_eq, G, h), layout


def solve_qp(problem, config, z0=None):
    """Solve an assembled horizon QP with the configured tolerances."""
    return solver.solve(problem, tol=config.kkt_tol,
                        max_iter=config.qp_max_iter, z0=z0)


def cold_start(ego, track, config, params):
    """Guess a horizon by rolling the centerline forward at the current
    speed while keeping the current lateral offset.

    :return: `(states, inputs)` of shapes `(N + 1, 9)` and `(N, 3)`.
    """
    ego = np.asarray(ego, dtype=float)
    speed = float(np.clip(ego[VX], max(config.x_lower[VX], params.vx_min),
                          config.x_upper[VX]))
    thetas = ego[THETA] + speed * config.dt * np.arange(config.N + 1)
    ref = lookup_many(track, thetas)
    eps_c, _ = contouring_errors(track, ego[THETA], ego[X], ego[Y])
    reach = np.maximum(ref['r'] - config.track_margin, 0.0)
    offset = np.clip(eps_c, -reach, reach)
    position = (np.column_stack([ref['x'], ref['y']]) +
                offset[:, None] * left_normal(ref['phi']))

    heading = ego[dynamics.PHI] + utils.wrap_angle(ref['phi'][0] -
                                                   ego[dynamics.PHI])
    headings = heading + np.concatenate(
        [[0.0], np.cumsum(utils.wrap_angle(np.diff(ref['phi'])))])

    states = np.zeros((config.N + 1, NX))
    states[:, X], states[:, Y] = position[:, 0], position[:, 1]
    states[:, dynamics.PHI] = headings
    states[:, VX] = speed
    states[:, OMEGA] = speed * ref['kappa']
    states[:, D] = dynamics.steady_state_drive(speed, params)
    states[:, DELTA] = np.arctan((params.lf + params.lr) * ref['kappa'])
    states[:, THETA] = thetas
    states = np.clip(states, config.x_lower, config.x_upper)
    states[0] = ego

    inputs = np.zeros((config.N, NU))
    inputs[:, 0] = np.diff(states[:, D]) / config.dt
    inputs[:, 1] = np.diff(states[:, DELTA]) / config.dt
    inputs[:, 2] = speed
    return states, np.clip(inputs, config.u_lower, config.u_upper)


def shift_warmstart(states, inputs, params, config):
    """Drop the first stage and extend the horizon by one model step."""
    try:
        tail = dynamics.integrate(states[-1], inputs[-1], params, config.dt)
    except DegenerateVelocityError:
        tail = states[-1]
    tail = np.clip(tail, config.x_lower, config.x_upper)
    return (np.vstack([states[1:], tail]),
            np.vstack([inputs[1:], inputs[-1:]]))


def fallback_input(previous, ego, config):
    """Input applied when the planner has no usable solution.

    Keeps the previous steering and progress rates and backs off 20% of the
    drive command over one step.
    """
    ego = np.asarray(ego, dtype=float)
    if previous is None:
        previous = np.array([0.0, 0.0, ego[VX]])
    control = np.array(previous, dtype=float)
    control[0] = -BRAKE_OFF * ego[D] / config.dt
    return dynamics.ControlInput(np.clip(control, config.u_lower,
                                         config.u_upper))


def plan(ego, obstacle_pred, mode, memory, config, track, params):
    """Run the damped SQP for one receding-horizon step.

    :param ego: The current state; its `theta` must be synchronized with the
                track.
    :param obstacle_pred: `(N + 1, 2)` predicted obstacle centers or `None`.
    :param Mode mode: The active driving mode.
    :param memory: `(states, inputs)` from the previous call or `None` for
                   a cold start.

    The plan counts as infeasible when its mode slack exceeds
    `slack_budget` plus the mode violation the ego already carries, so a
    freshly engaged mode may start on the wrong half.
    :return MpccSolution: The best-effort solution; callers fall back when
                          `solution.usable` is false.
    """
    ego = np.asarray(ego, dtype=float)
    log = logger.bind(mode=mode.value, theta=float(ego[THETA]))
    if memory is None:
        states, inputs = cold_start(ego, track, config, params)
    else:
        states, inputs = (np.array(part, dtype=float) for part in memory)
        states[:, THETA] += ego[THETA] - states[0, THETA]
        states[0] = ego

    damping = 1.0
    previous = None
    converged = False
    theta_gaps, objectives = [], []
    result = problem = layout = None
    step = np.inf
    for iteration in range(config.sqp_iters):
        problem, layout = assemble_qp(track, mode, obstacle_pred, states,
                                      inputs, ego, config, params)
        guess = layout.pack(states, inputs)
        result = solve_qp(problem, config, z0=guess)
        if result.status is solver.SolveStatus.INFEASIBLE:
            log.debug("SQP subproblem infeasible", iteration=iteration)
            break
        new_states, new_inputs, _, _ = layout.unpack(result.z)
        theta_gaps.append(float(np.max(np.abs(new_states[:, THETA] -
                                              states[:, THETA]))))
        objective = _objective_without_proximal(result, guess)
        objectives.append(objective)
        if previous is not None and objective > previous:
            damping = max(0.5 * damping, MIN_DAMPING)
        previous = objective
        step = damping * max(np.max(np.abs(new_states - states)),
                             np.max(np.abs(new_inputs - inputs)))
        states = states + damping * (new_states - states)
        inputs = inputs + damping * (new_inputs - inputs)
        states[0] = ego
        log.debug("SQP iteration", iteration=iteration, step=step,
                  objective=objective, qp=result)
        if step <= config.sqp_step_tol:
            converged = True
            break

    status = result.status
    if status is solver.SolveStatus.INFEASIBLE:
        planned_states, planned_inputs = states, inputs
        slack = safety_slack = np.zeros(config.N + 1)
        objective = np.inf
    else:
        planned_states, planned_inputs, slack, safety_slack = \
            layout.unpack(result.z)
        objective = objectives[-1]
        if not converged:
            log.debug("SQP stopped before convergence",
                      iterations=config.sqp_iters, step=step)
        if float(np.max(safety_slack)) > SLACK_NOISE:
            log.debug("Safety constraints softened",
                      safety_slack=float(np.max(safety_slack)))
        allowance = config.slack_budget + mode_violation(track, ego, mode)
        if float(np.max(slack)) > allowance:
            log.info("Mode slack exceeds the budget",
                     slack=float(np.max(slack)), allowance=allowance)
            status = solver.SolveStatus.INFEASIBLE
    warmstart = shift_warmstart(states, inputs, params, config)
    return MpccSolution(planned_states.copy(), planned_inputs.copy(),
                        slack.copy(), status, result.residual, objective,
                        mode, warmstart, theta_gaps, objectives, problem,
                        result.z, safety_slack.copy(), converged)


def mode_violation(track, state, mode):
    """How far `state` is on the wrong side for `mode`, in meters.

    Zero in `Mode.NORMAL` and whenever the state already satisfies the mode.
    """
    if mode is Mode.NORMAL:
        return 0.0
    state = np.asarray(state, dtype=float)
    row = _mode_halfspace(track, state, mode)
    return max(0.0, float(row.normal @ state - row.bound))


def _objective_without_proximal(result, guess):
    z = result.z
    proximal = 0.5 * PROXIMAL_WEIGHT * z @ z - PROXIMAL_WEIGHT * guess @ z
    return float(result.objective - proximal)


class Planner(object):
    """A receding-horizon controller that keeps its warmstart memory.

    One instance drives one vehicle; instances are not shared between
    trials.
    """

    def __init__(self, track, params=None, config=None):
        self.track = track
        self.params = params or dynamics.VehicleParams.from_config()
        self.config = config or MpccConfig.from_config()
        self.memory = None

    def reset(self):
        self.memory = None

    def plan(self, ego, obstacle_pred=None, mode=Mode.NORMAL):
        solution = plan(ego, obstacle_pred, mode, self.memory, self.config,
                        self.track, self.params)
        self.memory = solution.warmstart
        logger.debug("Planned", **solution.summary())
        return solution

    def __repr__(self):
        return '<Planner: {} {}>'.format(self.track, self.config)
