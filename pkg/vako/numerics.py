"""
Dense numerical kernel: finite differences, Newton root finding, fixed
step RK4 and SVD based rank/nullspace estimation.

All functions are pure functions of their inputs.

"""
import collections
import logging

import numpy as np

from vako.common import (FD_STEP, NULLSPACE_TOL, NonFiniteEvaluation,
                         SingularJacobian, MaxIterations, VakoError,
                         check_finite, as_vector)

LOGGER = logging.getLogger(__name__)

# Jacobians with a condition estimate above this are treated as singular
JACOBIAN_COND_LIMIT = 1e12

# Maximum step halvings in the damped Newton line search
MAX_HALVINGS = 12

# Step halvings tried on a secant Jacobian step before rebuilding the Jacobian
SECANT_HALVINGS = 3

# Relative singular value cut off of least squares Newton steps, per Jacobian
# difference scheme
LSTSQ_RCOND = 1e-10
LSTSQ_RCOND_FORWARD = 1e-7


class NewtonConfig:
    """
    Newton solver settings.

    """
    def __init__(self, abs_tolerance=1e-10, max_iterations=50, fd_step=FD_STEP):
        if not abs_tolerance > 0:
            raise ValueError("abs_tolerance must be positive")
        if int(max_iterations) < 1:
            raise ValueError("max_iterations must be at least 1")
        if not fd_step > 0:
            raise ValueError("fd_step must be positive")
        self.abs_tolerance = float(abs_tolerance)
        self.max_iterations = int(max_iterations)
        self.fd_step = float(fd_step)

    def __repr__(self):
        return (f"<NewtonConfig(tol={self.abs_tolerance}, "
                f"max_iter={self.max_iterations}, fd_step={self.fd_step})>")

    def replace(self, **kwargs):
        args = dict(abs_tolerance=self.abs_tolerance,
                    max_iterations=self.max_iterations,
                    fd_step=self.fd_step)
        args.update(kwargs)
        return NewtonConfig(**args)


NewtonResult = collections.namedtuple("NewtonResult",
                                      ("x", "residual", "iterations"))

Trajectory = collections.namedtuple("Trajectory", ("times", "states"))


def _fd_steps(x, h, rel_step=FD_STEP):
    if h is None:
        return rel_step * (1.0 + np.abs(x))
    return np.full(x.shape, float(h))


def fd_gradient(f, x, h=None):
    """
    Central difference gradient of a scalar map.

    Args:
        f: Scalar function of a 1-d array.

        x: Evaluation point.

        h: Fixed step. When omitted the step is 1e-6 scaled by (1 + |x_i|)
        componentwise.

    """
    x = as_vector(x)
    steps = _fd_steps(x, h)
    grad = np.empty_like(x)
    for i, step in enumerate(steps):
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        fp = float(f(xp))
        fm = float(f(xm))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NonFiniteEvaluation(
                f"Non-finite function value on the difference stencil (component {i})")
        grad[i] = (fp - fm) / (2.0 * step)
    return grad


def fd_jacobian(F, x, h=None, rel_step=FD_STEP, forward=False, f0=None):
    """
    Finite difference Jacobian of a vector map, shape (len(F(x)), len(x)).

    Central differences by default. With forward one-sided differences
    from f0 = F(x) (evaluated when not given) are used, one map
    evaluation per column.

    """
    x = as_vector(x)
    steps = _fd_steps(x, h, rel_step)
    if forward and f0 is None:
        f0 = F(x)
    if forward:
        f0 = check_finite(np.atleast_1d(f0), "Jacobian stencil")
    columns = []
    for i, step in enumerate(steps):
        xp = x.copy()
        xp[i] += step
        fp = check_finite(np.atleast_1d(F(xp)), "Jacobian stencil")
        if forward:
            columns.append((fp - f0) / step)
            continue
        xm = x.copy()
        xm[i] -= step
        fm = check_finite(np.atleast_1d(F(xm)), "Jacobian stencil")
        columns.append((fp - fm) / (2.0 * step))
    if not columns:
        return np.zeros((np.atleast_1d(F(x)).shape[0], 0))
    return np.column_stack(columns)


def cond_estimate(A):
    A = np.atleast_2d(A)
    if A.size == 0:
        return 1.0
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


def _residual_norm(F, x):
    try:
        fx = np.atleast_1d(np.asarray(F(x), dtype=float))
    except VakoError:
        return None, np.inf
    if not np.all(np.isfinite(fx)):
        return None, np.inf
    return fx, float(np.max(np.abs(fx))) if fx.size else 0.0


def newton_solve(F, x0, cfg=None, jac=None, line_search=False, least_squares=False,
                 forward_differences=False, broyden=False):
    """
    Newton's method for F(x) = 0.

    Args:
        F: Map from R^m to R^m (R^r for least_squares).

        x0: Starting point.

        cfg: NewtonConfig.

        jac: Optional Jacobian callback; finite differences otherwise.

        line_search: Halve the step (up to MAX_HALVINGS times) until the
        residual max-norm decreases. Trial points where F fails count as
        worse.

        least_squares: Use a minimum norm least squares step instead of
        raising SingularJacobian, for residual maps with solution families.

        forward_differences: Build the finite difference Jacobian from
        one-sided differences at the current residual.

        broyden: After an accepted step update the Jacobian by a rank one
        secant correction instead of rebuilding it. The Jacobian is rebuilt
        when a step from a secant Jacobian fails to lower the residual.

    Returns:
        NewtonResult with the root, its residual max-norm and the number of
        Newton steps taken.

    """
    cfg = cfg or NewtonConfig()
    x = as_vector(x0).copy()
    fx = check_finite(np.atleast_1d(F(x)), "Newton residual")
    norm = float(np.max(np.abs(fx))) if fx.size else 0.0
    best = norm
    J = None
    rcond = LSTSQ_RCOND_FORWARD if forward_differences and jac is None else LSTSQ_RCOND

    for iteration in range(cfg.max_iterations):
        if norm <= cfg.abs_tolerance:
            return NewtonResult(x, norm, iteration)

        fresh = J is None
        if fresh and jac is not None:
            J = check_finite(np.atleast_2d(jac(x)), "Newton Jacobian")
        elif fresh:
            J = fd_jacobian(F, x, rel_step=cfg.fd_step, forward=forward_differences, f0=fx)

        if least_squares:
            step = np.linalg.lstsq(J, -fx, rcond=rcond)[0]
        else:
            cond = cond_estimate(J)
            if cond > JACOBIAN_COND_LIMIT and iteration == 0:
                raise SingularJacobian(
                    f"Newton Jacobian is singular (condition estimate {cond:.3g})")
            if cond > JACOBIAN_COND_LIMIT and not fresh:
                J = None
                continue
            if cond > JACOBIAN_COND_LIMIT:
                # An iterate reached a stationary point of the residual
                raise MaxIterations(
                    f"Newton stalled at a singular Jacobian after {iteration} iterations "
                    f"(best residual {best:.3e})", best_residual=best)
            step = np.linalg.solve(J, -fx)

        scale = 1.0
        x_new, f_new, norm_new = x + step, *_residual_norm(F, x + step)
        if line_search:
            halvings = 0
            limit = MAX_HALVINGS if fresh else SECANT_HALVINGS
            while norm_new >= norm and halvings < limit:
                scale *= 0.5
                halvings += 1
                x_new = x + scale * step
                f_new, norm_new = _residual_norm(F, x_new)
        if not fresh and (f_new is None or norm_new >= norm):
            LOGGER.debug("Newton iteration %d: secant step rejected, rebuilding the Jacobian",
                         iteration)
            J = None
            continue
        if f_new is None and line_search:
            raise MaxIterations("Line search could not find a finite residual",
                                best_residual=best)
        if f_new is None:
            raise NonFiniteEvaluation("Newton step produced a non-finite residual")

        LOGGER.debug("Newton iteration %d: residual %.3e -> %.3e (step scale %g)",
                     iteration, norm, norm_new, scale)
        s = x_new - x
        if broyden and s @ s > 0.0:
            J = J + np.outer(f_new - fx - J @ s, s) / (s @ s)
        elif not broyden:
            J = None
        x, fx, norm = x_new, f_new, norm_new
        best = min(best, norm)

    if norm <= cfg.abs_tolerance:
        return NewtonResult(x, norm, cfg.max_iterations)
    raise MaxIterations(
        f"Newton did not converge in {cfg.max_iterations} iterations "
        f"(best residual {best:.3e})", best_residual=best)


def rk4_step(rhs, t, x, h, k1=None):
    if k1 is None:
        k1 = rhs(t, x)
    k1 = check_finite(k1, "right-hand side", time=t)
    k2 = check_finite(rhs(t + h / 2, x + h / 2 * k1), "right-hand side", time=t + h / 2)
    k3 = check_finite(rhs(t + h / 2, x + h / 2 * k2), "right-hand side", time=t + h / 2)
    k4 = check_finite(rhs(t + h, x + h * k3), "right-hand side", time=t + h)
    return x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_integrate(rhs, x0, t0, t1, steps, at_sample=None):
    """
    Classical fixed step RK4.

    Args:
        at_sample: Optional callback (t, x) -> rhs(t, x) called once at every
        sample, endpoints included. Its value is the first stage of the
        step leaving that sample.

    Returns:
        Trajectory with all steps + 1 samples, endpoints included.

    """
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be at least 1")
    x = check_finite(np.array(x0, dtype=float), "initial state", time=t0)
    times = np.linspace(t0, t1, steps + 1)
    h = (t1 - t0) / steps
    states = np.empty((steps + 1,) + x.shape)
    states[0] = x
    for i in range(steps):
        k1 = None if at_sample is None else at_sample(times[i], x)
        x = check_finite(rk4_step(rhs, times[i], x, h, k1=k1), "state", time=times[i + 1])
        states[i + 1] = x
    if at_sample is not None:
        at_sample(times[-1], x)
    return Trajectory(times, states)


def nullspace(A, tol=NULLSPACE_TOL):
    """
    Orthonormal basis (as columns) of the right singular directions of A
    with singular value below tol * sigma_max. Everything is kernel when
    A is zero.

    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    if A.shape[0] == 0 or n == 0:
        return np.eye(n)
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(n)
    rank = int(np.sum(s >= tol * smax))
    return vh[rank:].T.copy()


def rank(A, tol=NULLSPACE_TOL):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return A.shape[1] - nullspace(A, tol).shape[1]
