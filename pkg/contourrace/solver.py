"""Sparse primal-dual interior-point solver for convex QPs.

Solves::

    minimize    1/2 z'Hz + f'z
    subject to  A z  = b
                G z <= h

with Mehrotra's predictor-corrector method on the reduced KKT system, which
is factored once per iteration with a sparse LU decomposition.
"""
import enum

import numpy as np
import scipy.sparse as sp
import structlog
from scipy.sparse.linalg import splu

from .exceptions import SolverError

__all__ = ['QpProblem', 'QpResult', 'SolveStatus', 'solve',
           'constraint_violation']

logger = structlog.get_logger()

#: Fraction of the distance to the boundary the iterates may move.
STEP_FRACTION = 0.99
#: Dual magnitude above which a Farkas certificate is checked.
CERTIFICATE_THRESHOLD = 1e8
REGULARIZATION = 1e-10
#: Constraint violation above which a stalled solve counts as infeasible.
STALL_VIOLATION = 1e-4


class SolveStatus(enum.Enum):
    OPTIMAL = 'Optimal'
    MAX_ITER = 'MaxIter'
    INFEASIBLE = 'Infeasible'


class QpProblem(object):
    """A convex QP in the form solved by `solve`.

    Any of the constraint blocks may be empty (`None`).
    """

    def __init__(self, H, f, A=None, b=None, G=None, h=None):
        self.f = np.asarray(f, dtype=float)
        n = len(self.f)
        self.H = sp.csc_matrix(H, shape=(n, n))
        self.A = sp.csc_matrix((0, n)) if A is None else sp.csc_matrix(A)
        self.b = np.zeros(0) if b is None else np.asarray(b, dtype=float)
        self.G = sp.csc_matrix((0, n)) if G is None else sp.csc_matrix(G)
        self.h = np.zeros(0) if h is None else np.asarray(h, dtype=float)
        if self.A.shape != (len(self.b), n) or \
                self.G.shape != (len(self.h), n):
            raise ValueError("Constraint shapes do not match the variables")
        if not (np.all(np.isfinite(self.f)) and np.all(np.isfinite(self.b))
                and np.all(np.isfinite(self.h))):
            raise ValueError("QP data must be finite")

    @property
    def size(self):
        return len(self.f)

    def objective(self, z):
        return float(0.5 * z @ (self.H @ z) + self.f @ z)

    def __repr__(self):
        return '<QpProblem: vars={} eq={} ineq={}>'.format(
            self.size, len(self.b), len(self.h))


class QpResult(object):
    def __init__(self, z, y, lam, s, status, iterations, residual,
                 objective):
        self.z = z
        self.y = y
        self.lam = lam
        self.s = s
        self.status = status
        self.iterations = iterations
        self.residual = residual
        self.objective = objective

    def __repr__(self):
        return '<QpResult: {} iterations={} residual={:.3g}>'.format(
            self.status.value, self.iterations, self.residual)


def constraint_violation(problem, z):
    """Largest equality residual or inequality excess at `z`."""
    violation = 0.0
    if len(problem.b):
        violation = float(np.max(np.abs(problem.A @ z - problem.b)))
    if len(problem.h):
        violation = max(violation,
                        float(np.max(problem.G @ z - problem.h)))
    return max(violation, 0.0)


def _max_step(values, directions):
    negative = directions < 0
    if not np.any(negative):
        return 1.0
    return min(1.0, float(np.min(-values[negative] / directions[negative])))


def _is_infeasible(problem, y, lam):
    scale = max(np.max(np.abs(y), initial=0.0), np.max(lam, initial=0.0))
    if scale < CERTIFICATE_THRESHOLD:
        return False
    y, lam = y / scale, lam / scale
    stationarity = problem.A.T @ y + problem.G.T @ lam
    gap = problem.b @ y + problem.h @ lam
    return (np.max(np.abs(stationarity), initial=0.0) <= 1e-6 and
            gap < -1e-6)


def solve(problem, tol=1e-6, max_iter=60, z0=None):
    """Solve a convex QP.

    :param QpProblem problem: The problem data; `H` must be positive
                              semidefinite.
    :param float tol: Bound on the stationarity, feasibility and
                      complementarity residuals for an optimal result.
    :param int max_iter: Iteration limit.
    :param z0: Optional primal starting point; slacks and duals are always
               started from the interior.
    :return QpResult: The last iterate with its status.

    :raises SolverError: If the KKT system is singular or the iterates stop
                         being finite.
    """
    H, f, A, b, G, h = (problem.H, problem.f, problem.A, problem.b,
                        problem.G, problem.h)
    n, m_eq, m_in = problem.size, len(b), len(h)
    z = np.zeros(n) if z0 is None else np.array(z0, dtype=float)
    y = np.zeros(m_eq)
    s = np.maximum(h - G @ z, 1.0)
    lam = np.ones(m_in)
    identity = sp.identity(n, format='csc')
    # The dual residual is measured relative to the size of the linear term
    dual_scale = 1.0 + np.max(np.abs(f), initial=0.0)

    status = SolveStatus.MAX_ITER
    residual = np.inf
    iteration = 0
    for iteration in range(1, max_iter + 1):
        r_d = H @ z + f + A.T @ y + G.T @ lam
        r_eq = A @ z - b
        r_in = G @ z + s - h
        complementarity = s * lam
        mu = float(complementarity.mean()) if m_in else 0.0
        residual = max(np.max(np.abs(r_d), initial=0.0) / dual_scale,
                       np.max(np.abs(r_eq), initial=0.0),
                       np.max(np.abs(r_in), initial=0.0),
                       np.max(complementarity, initial=0.0))
        if not np.isfinite(residual):
            raise SolverError("QP iterates diverged at iteration {}".format(
                iteration))
        if residual <= tol:
            status = SolveStatus.OPTIMAL
            break
        if m_in and _is_infeasible(problem, y, lam):
            status = SolveStatus.INFEASIBLE
            break

        top = H + REGULARIZATION * identity
        if m_in:
            top = top + G.T @ sp.diags(lam / s) @ G
        if m_eq:
            kkt = sp.bmat([[top, A.T],
                           [A, -REGULARIZATION *
                            sp.identity(m_eq, format='csc')]], format='csc')
        else:
            kkt = sp.csc_matrix(top)
        try:
            factor = splu(kkt)
        except RuntimeError as e:
            raise SolverError("Singular KKT system: {}".format(e))

        def direction(r_c):
            rhs_top = -r_d - G.T @ ((lam * r_in - r_c) / s) if m_in \
                else -r_d
            solution = factor.solve(np.concatenate([rhs_top, -r_eq]))
            dz, dy = solution[:n], solution[n:]
            ds = -r_in - G @ dz
            dlam = (-r_c - lam * ds) / s if m_in else np.zeros(0)
            return dz, dy, ds, dlam

        dz, dy, ds, dlam = direction(complementarity)
        if m_in:
            alpha = min(_max_step(s, ds), _max_step(lam, dlam))
            mu_affine = float(((s + alpha * ds) @ (lam + alpha * dlam)) /
                              m_in)
            centering = (mu_affine / mu)**3
            dz, dy, ds, dlam = direction(
                complementarity + ds * dlam - centering * mu)
            alpha = STEP_FRACTION * min(_max_step(s, ds),
                                        _max_step(lam, dlam))
        else:
            alpha = 1.0
        z = z + alpha * dz
        y = y + alpha * dy
        s = s + alpha * ds
        lam = lam + alpha * dlam

    if status is SolveStatus.MAX_ITER and \
            constraint_violation(problem, z) > STALL_VIOLATION:
        status = SolveStatus.INFEASIBLE
    result = QpResult(z, y, lam, s, status, iteration, float(residual),
                      problem.objective(z))
    logger.debug("QP finished", result=result, problem=problem)
    return result
