"""
Hamilton equations of the degenerate Hamiltonian

    dq/dt = dH/dp,  dp/dt = -dH/dq

integrated with fixed step RK4, plus lifts of horizontal velocities to
covectors and the conservation/horizontality report of a path.

"""
import collections
import logging
import time

import numpy as np

from vako import numerics
from vako.common import VakoError, DiscreteCurve, as_vector
from vako.geometry import horizontality_residual

LOGGER = logging.getLogger(__name__)


FlowReport = collections.namedtuple(
    "FlowReport", ("energy_drift", "horizontality_max", "steps", "wall_time"))


class PhasePath:
    """
    Samples of a solution (q(t), p(t)) on a fixed grid with the recovered
    minimizing controls u and the Hamiltonian values.

    """
    def __init__(self, times, q, p, u, H, wall_time=0.0):
        self.times = np.asarray(times, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.p = np.asarray(p, dtype=float)
        self.u = np.asarray(u, dtype=float)
        self.H = np.asarray(H, dtype=float)
        self.wall_time = wall_time
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("Path time grid must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def __repr__(self):
        return f"<PhasePath({len(self)} samples, t=[{self.times[0]}, {self.times[-1]}])>"

    @property
    def curve(self):
        return DiscreteCurve(self.times, self.q, self.u)

    @property
    def p0(self):
        return self.p[0]


def _attach_time(err, t):
    if err.time is None:
        err.time = float(t)
    return err


def integrate_hamilton(dh, t0, t1, q0, p0, steps):
    """
    Integrate the Hamilton equations of dh from (q0, p0) at t0 to t1.

    The fiber minimizer found at one evaluation warm starts the next one.
    The first RK4 stage of a step is evaluated at the sample itself, and
    the controls and Hamiltonian value of the path are taken from it.
    Errors carry the time at which the evaluation failed.

    """
    n = dh.problem.n
    q0 = as_vector(q0, n, "initial point")
    p0 = as_vector(p0, n, "initial covector")
    warm = {"u": None}
    controls, values = [], []
    started = time.perf_counter()

    def rhs(t, x):
        try:
            grad = dh.grad(t, x[:n], x[n:], warm=warm["u"])
        except VakoError as err:
            raise _attach_time(err, t)
        warm["u"] = grad.u
        return grad

    def field(t, x):
        grad = rhs(t, x)
        return np.concatenate([grad.dp, -grad.dq])

    def at_sample(t, x):
        grad = rhs(t, x)
        controls.append(grad.u)
        values.append(grad.H)
        return np.concatenate([grad.dp, -grad.dq])

    trajectory = numerics.rk4_integrate(field, np.concatenate([q0, p0]), t0, t1, steps,
                                        at_sample=at_sample)

    wall_time = time.perf_counter() - started
    LOGGER.debug("Integrated %s over [%g, %g] in %d steps (%.3fs)",
                 dh.problem.name, t0, t1, steps, wall_time)
    return PhasePath(trajectory.times, trajectory.states[:, :n], trajectory.states[:, n:],
                     np.reshape(controls, (len(trajectory.times), dh.problem.k)), values,
                     wall_time)


def flow_report(path, problem, autonomous):
    drift = None
    if autonomous:
        drift = float(np.max(np.abs(path.H - path.H[0])))
    residual = horizontality_residual(problem, DiscreteCurve(path.times, path.q))
    return FlowReport(drift, residual.max, len(path) - 1, path.wall_time)


def lift_from_velocity(lagr, t, q, u, lambda_Dprime=None):
    """
    The covector p with p . X_i = dL/du_i and p . X'_j = lambda_j (zero by
    default).

    """
    problem = lagr.problem
    q = as_vector(q, problem.n, "point")
    F = problem.frame_matrix(t, q)
    if lambda_Dprime is None:
        lambda_Dprime = np.zeros(problem.corank)
    rhs = np.concatenate([lagr.du(t, q, as_vector(u, problem.k, "control")),
                          as_vector(lambda_Dprime, problem.corank, "complement components")])
    return np.linalg.solve(F.T, rhs)
