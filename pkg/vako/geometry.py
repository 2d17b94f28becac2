"""
Manifold in a single global chart: the distribution D given by a frame
and its annihilator, the complement D', and boundary submanifolds.

Frame callbacks are matrix valued:
    X(t, q)      -> n x k, columns are the horizontal fields X_i
    theta(t, q)  -> (n-k) x n, rows are the one-forms theta^a
    Xprime(t, q) -> n x (n-k), columns span D'
    dX(t, q)     -> n x k x n, dX[l, i, j] = d X_i^l / d q_j
    dtheta(t, q) -> (n-k) x n x n, dtheta[a, l, j] = d theta^a_l / d q_j

"""
import collections
import logging

import numpy as np

from vako import numerics
from vako.common import (FD_STEP, FRAME_COND_LIMIT, DegenerateFrame,
                         DimensionMismatch, NotOnSubmanifold,
                         RankDeficientConstraint, Regularity, DiscreteCurve,
                         check_finite, as_vector)

LOGGER = logging.getLogger(__name__)

# Tolerance for the annihilator property theta(X_i) = 0
ANNIHILATOR_TOL = 1e-10

# Tolerance for "q lies on S" and for constraint Jacobian rank
SUBMANIFOLD_TOL = 1e-8

# Gauss-Newton corrections used when projecting onto a level set
PROJECTION_STEPS = 5
PROJECTION_TOL = 1e-12


def _derivative_fd(fn, t, q):
    """
    Central differences of a matrix valued callback in q, stacked on a
    trailing axis.

    """
    slices = []
    for j in range(len(q)):
        step = FD_STEP * (1.0 + abs(q[j]))
        qp = q.copy()
        qm = q.copy()
        qp[j] += step
        qm[j] -= step
        slices.append((np.asarray(fn(t, qp), dtype=float) -
                       np.asarray(fn(t, qm), dtype=float)) / (2.0 * step))
    return np.stack(slices, axis=-1)


class DistributionFrame:
    """
    The horizontal frame X, the annihilator theta and the complementary
    frame X' of a distribution, plus optional spatial derivatives.

    """
    def __init__(self, X, theta, Xprime, dX=None, dtheta=None):
        self._X = X
        self._theta = theta
        self._Xprime = Xprime
        self._dX = dX
        self._dtheta = dtheta

    @property
    def has_dX(self):
        return self._dX is not None

    def X(self, t, q):
        return np.atleast_2d(np.asarray(self._X(t, q), dtype=float))

    def theta(self, t, q):
        return np.asarray(self._theta(t, q), dtype=float).reshape(-1, len(q))

    def Xprime(self, t, q):
        return np.asarray(self._Xprime(t, q), dtype=float).reshape(len(q), -1)

    def dX(self, t, q):
        if self._dX is not None:
            return np.asarray(self._dX(t, q), dtype=float)
        return _derivative_fd(self.X, t, q)

    def dtheta(self, t, q):
        if self._dtheta is not None:
            return np.asarray(self._dtheta(t, q), dtype=float)
        return _derivative_fd(self.theta, t, q)

    def matrix(self, t, q):
        """
        The combined n x n frame [X_1 .. X_k X'_1 .. X'_{n-k}].

        """
        return np.hstack([self.X(t, q), self.Xprime(t, q)])


class ChartProblem:
    """
    A manifold presented in one global chart, carrying the ambient
    dimension n, the distribution rank k and the frame callbacks.

    """
    def __init__(self, n, k, frame, domain_check=None, name=None):
        if not 1 <= k <= n:
            raise DimensionMismatch(f"Distribution rank {k} must lie in [1, {n}]")
        self.n = int(n)
        self.k = int(k)
        self.frame = frame
        self.domain_check = domain_check
        self.name = name

    def __repr__(self):
        return f"<ChartProblem({self.name}, n={self.n}, k={self.k})>"

    @property
    def corank(self):
        return self.n - self.k

    def in_domain(self, t, q):
        return self.domain_check is None or bool(self.domain_check(t, q))

    def frame_matrix(self, t, q):
        """
        The combined frame matrix, raising DegenerateFrame when it is not
        numerically invertible.

        """
        q = as_vector(q, self.n, "point")
        if not self.in_domain(t, q):
            raise DegenerateFrame("Point lies outside the frame domain", time=t)
        F = check_finite(self.frame.matrix(t, q), "frame matrix", time=t)
        if F.shape != (self.n, self.n):
            raise DimensionMismatch(f"Frame matrix has shape {F.shape}, "
                                    f"expected {(self.n, self.n)}")
        cond = numerics.cond_estimate(F)
        if cond > FRAME_COND_LIMIT:
            raise DegenerateFrame(f"Frame matrix is singular (condition {cond:.3g})",
                                  time=t)
        return F

    def self_check(self, points, t=0.0, cond_limit=FRAME_COND_LIMIT):
        """
        Verify the annihilator property and the invertibility of the frame
        and of theta(X') at each point. Returns the worst annihilator
        residual and the worst frame condition estimate.

        """
        worst_residual = 0.0
        worst_cond = 1.0
        for q in np.atleast_2d(points):
            X = self.frame.X(t, q)
            if self.corank:
                theta = self.frame.theta(t, q)
                residual = float(np.max(np.abs(theta @ X)))
                if residual > ANNIHILATOR_TOL:
                    raise DegenerateFrame(
                        f"theta(X) = {residual:.3g} at q={q}: annihilator property fails")
                tx = theta @ self.frame.Xprime(t, q)
                if numerics.cond_estimate(tx) > FRAME_COND_LIMIT:
                    raise DegenerateFrame(f"theta(X') is singular at q={q}")
                worst_residual = max(worst_residual, residual)
            cond = numerics.cond_estimate(self.frame_matrix(t, q))
            if cond > cond_limit:
                raise DegenerateFrame(f"Frame condition {cond:.3g} at q={q}")
            worst_cond = max(worst_cond, cond)
        return worst_residual, worst_cond


class TangentSplit(collections.namedtuple(
        "TangentSplit", ("proj_D", "proj_Dprime", "X", "to_frame", "to_complement"))):
    """
    Projections realizing TM = D + D' at one point, in chart coordinates,
    and the frame coordinate maps u <-> sum u_i X_i.

    """
    __slots__ = ()

    def from_frame(self, u):
        return self.X @ as_vector(u)

    def frame_coords(self, v):
        return self.to_frame @ as_vector(v)

    def complement_coords(self, v):
        return self.to_complement @ as_vector(v)


def eval_split(problem, t, q):
    F = problem.frame_matrix(t, q)
    k = problem.k
    Finv = np.linalg.inv(F)
    X = F[:, :k]
    Xp = F[:, k:]
    proj_D = X @ Finv[:k]
    proj_Dprime = Xp @ Finv[k:]
    return TangentSplit(proj_D, proj_Dprime, X, Finv[:k], Finv[k:])


HorizontalityResidual = collections.namedtuple(
    "HorizontalityResidual", ("vectors", "norms", "max"))


def horizontality_residual(problem, curve):
    """
    theta(gamma'(t)) at every sample of a discrete curve, velocities by
    differences.

    """
    velocities = curve.velocities()
    vectors = np.zeros((len(curve), problem.corank))
    for i, (t, q, v) in enumerate(zip(curve.times, curve.q, velocities)):
        problem.frame_matrix(t, q)
        if problem.corank:
            vectors[i] = problem.frame.theta(t, q) @ v
    norms = np.linalg.norm(vectors, axis=1)
    return HorizontalityResidual(vectors, norms, float(np.max(norms)) if len(norms) else 0.0)


def recover_controls(problem, curve):
    """
    Least squares frame controls of a curve's differenced velocities.

    Returns:
        (u, residual) where residual is the max distance of the velocity
        from span{X_i}.

    """
    velocities = curve.velocities()
    u = np.empty((len(curve), problem.k))
    residual = 0.0
    for i, (t, q, v) in enumerate(zip(curve.times, curve.q, velocities)):
        X = problem.frame.X(t, q)
        u[i] = np.linalg.lstsq(X, v, rcond=None)[0]
        residual = max(residual, float(np.linalg.norm(X @ u[i] - v)))
    return u, residual


def control_residual(problem, curve):
    """
    Max over samples of |gamma' - sum u_i X_i| for a curve carrying
    controls.

    """
    velocities = curve.velocities()
    worst = 0.0
    for t, q, v, u in zip(curve.times, curve.q, velocities, curve.u):
        worst = max(worst, float(np.linalg.norm(v - problem.frame.X(t, q) @ u)))
    return worst


def integrate_horizontal(problem, times, q0, u):
    """
    RK4 integration of gamma' = sum u_i(t) X_i(t, gamma) on a fixed grid,
    the controls linearly interpolated between samples.

    """
    times = np.asarray(times, dtype=float)
    u = np.atleast_2d(np.asarray(u, dtype=float))
    q = np.empty((len(times), problem.n))
    q[0] = as_vector(q0, problem.n, "initial point")

    def rhs(t, x, uu):
        return problem.frame.X(t, x) @ uu

    for i in range(len(times) - 1):
        t, h = times[i], times[i + 1] - times[i]
        u_mid = 0.5 * (u[i] + u[i + 1])
        x = q[i]
        k1 = rhs(t, x, u[i])
        k2 = rhs(t + h / 2, x + h / 2 * k1, u_mid)
        k3 = rhs(t + h / 2, x + h / 2 * k2, u_mid)
        k4 = rhs(t + h, x + h * k3, u[i + 1])
        q[i + 1] = check_finite(x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4),
                                "horizontal curve", time=times[i + 1])
    return DiscreteCurve(times, q, u)


# -----------------------------------------------------------
# Submanifolds
# -----------------------------------------------------------
class Submanifold:
    """
    Base class for boundary submanifolds P, Q of the chart.

    """
    def dim(self, n):
        raise NotImplementedError

    def residual(self, q):
        """Constraint values g(q); empty for points handled separately."""
        raise NotImplementedError

    def constraint_jacobian(self, q):
        raise NotImplementedError

    def tangent_basis(self, q, check=True):
        raise NotImplementedError

    def project(self, q):
        return as_vector(q)

    def distance(self, q):
        res = self.residual(q)
        return float(np.linalg.norm(res)) if res.size else 0.0

    def contains(self, q, tol=SUBMANIFOLD_TOL):
        return self.distance(q) <= tol


class Point(Submanifold):
    def __init__(self, q):
        self.q = as_vector(q)

    def __repr__(self):
        return f"<Point({self.q.tolist()})>"

    def dim(self, n):
        self._check_n(n)
        return 0

    def _check_n(self, n):
        if len(self.q) != n:
            raise DimensionMismatch(f"Point has dimension {len(self.q)}, chart has {n}")

    def residual(self, q):
        return as_vector(q) - self.q

    def constraint_jacobian(self, q):
        return np.eye(len(self.q))

    def tangent_basis(self, q, check=True):
        if check and not self.contains(q):
            raise NotOnSubmanifold(f"{q} is not the point {self.q}")
        return np.zeros((len(self.q), 0))

    def project(self, q):
        return self.q.copy()


class Whole(Submanifold):
    def __init__(self, n):
        self.n = int(n)

    def __repr__(self):
        return f"<Whole(n={self.n})>"

    def dim(self, n):
        if n != self.n:
            raise DimensionMismatch(f"Whole manifold of dimension {self.n}, chart has {n}")
        return self.n

    def residual(self, q):
        return np.zeros(0)

    def constraint_jacobian(self, q):
        return np.zeros((0, self.n))

    def tangent_basis(self, q, check=True):
        return np.eye(self.n)


class LevelSet(Submanifold):
    """
    Zero set of g: R^n -> R^c with full rank Jacobian on the zero set.

    """
    def __init__(self, g, codim, jac=None, n=None):
        self._g = g
        self._jac = jac
        self.codim = int(codim)
        self.n = n

    def __repr__(self):
        return f"<LevelSet(codim={self.codim})>"

    @classmethod
    def affine(cls, rows, offset):
        """
        The level set {q : rows @ q = offset}.

        """
        A = np.atleast_2d(np.asarray(rows, dtype=float))
        b = as_vector(offset, A.shape[0], "level set offset")
        return cls(lambda q: A @ q - b, A.shape[0], jac=lambda q: A, n=A.shape[1])

    def dim(self, n):
        if self.n is not None and self.n != n:
            raise DimensionMismatch(f"Level set lives in R^{self.n}, chart has {n}")
        if not 0 <= self.codim <= n:
            raise DimensionMismatch(f"Level set codimension {self.codim} exceeds {n}")
        return n - self.codim

    def residual(self, q):
        return check_finite(np.atleast_1d(self._g(as_vector(q))), "level set")

    def constraint_jacobian(self, q):
        q = as_vector(q)
        if self._jac is not None:
            J = np.atleast_2d(np.asarray(self._jac(q), dtype=float))
        else:
            J = numerics.fd_jacobian(self._g, q)
        return J.reshape(self.codim, len(q))

    def tangent_basis(self, q, check=True):
        q = as_vector(q)
        if check and not self.contains(q):
            raise NotOnSubmanifold(
                f"Level set residual {self.distance(q):.3g} at {q}")
        J = self.constraint_jacobian(q)
        kernel = numerics.nullspace(J, SUBMANIFOLD_TOL)
        if kernel.shape[1] != len(q) - self.codim:
            raise RankDeficientConstraint(
                f"Level set Jacobian has rank {len(q) - kernel.shape[1]} < {self.codim}")
        return kernel

    def project(self, q):
        """
        Gauss-Newton projection onto the zero set.

        """
        q = as_vector(q).copy()
        for _ in range(PROJECTION_STEPS):
            res = self.residual(q)
            if np.linalg.norm(res) <= PROJECTION_TOL:
                break
            J = self.constraint_jacobian(q)
            q = q - np.linalg.lstsq(J, res, rcond=None)[0]
        return q


def tangent_basis(S, q):
    return S.tangent_basis(q)


def tangent_projector(S, q, reference_basis):
    """
    Basis of T_qS obtained by projecting a fixed reference basis onto the
    kernel of the constraint Jacobian at q. Smooth in q.

    """
    J = S.constraint_jacobian(q)
    if J.shape[0] == 0:
        return reference_basis
    P = np.eye(J.shape[1]) - np.linalg.pinv(J) @ J
    return P @ reference_basis


def endpoint_regularity_sufficient(problem, S, t, q):
    """
    Regular if T_qS + D_q spans the tangent space; otherwise the test is
    inconclusive.

    """
    basis = S.tangent_basis(q)
    stacked = np.hstack([basis, problem.frame.X(t, as_vector(q))])
    if numerics.rank(stacked, SUBMANIFOLD_TOL) == problem.n:
        return Regularity.Regular
    return Regularity.Inconclusive
