"""
Constrained Lagrangians on the distribution and the degenerate
Hamiltonian H(t, q, p) = H0(t, q, p|D) built from their Legendre transform.

Velocities on D are carried in frame coordinates u (v = X u) and momenta
on D* as rho = X^T p.

"""
import collections
import logging

import numpy as np
import scipy.linalg

from vako import numerics
from vako.common import NotPositiveDefinite, VakoError, as_vector, check_finite
from vako.legendre import FiberMap, inverse_fiber_derivative

LOGGER = logging.getLogger(__name__)

# Metric symmetry tolerance
SYMMETRY_TOL = 1e-12


HamiltonianValue = collections.namedtuple("HamiltonianValue", ("H", "u", "rho"))

HamiltonianGradient = collections.namedtuple("HamiltonianGradient", ("dq", "dp", "u", "H"))


class ConstrainedLagrangian:
    """
    L(t, q, u) with u the frame coefficients of a horizontal velocity.

    Optional callbacks:
        dL_dq(t, q, u) -> n-vector
        dL_du(t, q, u) -> k-vector
        d2L_du2(t, q, u) -> k x k
        inverse(t, q, rho) -> u, a closed form inverse of dL_du

    """
    def __init__(self, problem, L, dL_dq=None, dL_du=None, d2L_du2=None,
                 inverse=None, autonomous=True):
        self.problem = problem
        self._L = L
        self._dL_dq = dL_dq
        self._dL_du = dL_du
        self._d2L_du2 = d2L_du2
        self.inverse = inverse
        self.autonomous = autonomous
        self.fiber = FiberMap(
            lambda base, u: L(base[0], base[1], u), problem.k,
            dZ=None if dL_du is None else lambda base, u: dL_du(base[0], base[1], u),
            d2Z=None if d2L_du2 is None else lambda base, u: d2L_du2(base[0], base[1], u))

    def __repr__(self):
        return f"<ConstrainedLagrangian({self.problem.name})>"

    def value(self, t, q, u):
        return float(check_finite(self._L(t, q, u), "Lagrangian", time=t))

    def dq(self, t, q, u):
        if self._dL_dq is not None:
            return check_finite(as_vector(self._dL_dq(t, q, u)), "dL/dq", time=t)
        return numerics.fd_gradient(lambda x: self._L(t, x, u), q)

    def du(self, t, q, u):
        return self.fiber.gradient((t, q), u)

    def d2u(self, t, q, u):
        return self.fiber.hessian((t, q), u)

    def energy(self, t, q, u):
        u = as_vector(u)
        return float(self.du(t, q, u) @ u - self.value(t, q, u))


class SubRiemannianData:
    """
    Metric G(t, q) on D in frame coordinates (k x k, SPD) and potential V(q).
    dmetric(t, q) is k x k x n with dmetric[i, j, l] = d G_ij / d q_l.

    """
    def __init__(self, metric, potential=None, dV=None, dmetric=None):
        self.metric = metric
        self.potential = potential
        self.dV = dV
        self.dmetric = dmetric

    def G(self, t, q):
        G = check_finite(np.atleast_2d(self.metric(t, q)), "metric", time=t)
        if np.max(np.abs(G - G.T), initial=0.0) > SYMMETRY_TOL:
            raise NotPositiveDefinite(f"Metric is not symmetric at q={q}", time=t)
        return G

    def factor(self, t, q):
        try:
            return scipy.linalg.cho_factor(self.G(t, q))
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite(f"Metric is not positive definite at q={q}",
                                      time=t) from None

    def V(self, q):
        return 0.0 if self.potential is None else float(self.potential(q))

    def grad_V(self, q):
        if self.potential is None:
            return np.zeros(len(q))
        if self.dV is not None:
            return as_vector(self.dV(q))
        return numerics.fd_gradient(self.potential, q)


def make_subriemannian(data, problem, autonomous=True):
    """
    L(t, q, u) = 1/2 u^T G u - V(q), with fiber derivative G u, fiber
    Hessian G and the Cholesky inverse rho -> G^-1 rho as fast path.

    """
    def L(t, q, u):
        return 0.5 * u @ data.G(t, q) @ u - data.V(q)

    def dL_du(t, q, u):
        return data.G(t, q) @ u

    def d2L_du2(t, q, u):
        return data.G(t, q)

    def inverse(t, q, rho):
        return scipy.linalg.cho_solve(data.factor(t, q), rho)

    dL_dq = None
    if data.dmetric is not None:
        def dL_dq(t, q, u):
            dG = np.asarray(data.dmetric(t, q), dtype=float)
            return 0.5 * np.einsum("i,ijl,j->l", u, dG, u) - data.grad_V(q)

    return ConstrainedLagrangian(problem, L, dL_dq=dL_dq, dL_du=dL_du,
                                 d2L_du2=d2L_du2, inverse=inverse,
                                 autonomous=autonomous)


def check_subriemannian(data, points, t=0.0):
    """
    Raise NotPositiveDefinite unless the metric factors at every point.

    """
    for q in np.atleast_2d(points):
        data.factor(t, q)
    return True


class DegenerateHamiltonian:
    """
    H(t, q, p) = rho . u - L(t, q, u) with rho = X^T p and u = dL_du^-1(rho).

    Evaluation is pure: warm starts for the fiber inversion are passed in
    by the caller. With generic the closed form inverse of the Lagrangian
    is ignored and every evaluation goes through Newton.

    """
    def __init__(self, lagr, generic=False, cfg=None):
        self.lagr = lagr
        self.problem = lagr.problem
        self.generic = generic
        self.cfg = cfg

    def __repr__(self):
        return f"<DegenerateHamiltonian({self.problem.name}, generic={self.generic})>"

    def restrict(self, t, q, p):
        return self.problem.frame.X(t, q).T @ p

    def minimizer(self, t, q, rho, warm=None):
        if self.lagr.inverse is not None and not self.generic:
            return check_finite(as_vector(self.lagr.inverse(t, q, rho)),
                                "fiber inverse", time=t)
        try:
            return inverse_fiber_derivative(self.lagr.fiber, (t, q), rho,
                                            guess=warm, cfg=self.cfg)
        except VakoError as err:
            if err.time is None:
                err.time = t
            raise

    def eval(self, t, q, p, warm=None):
        q = as_vector(q, self.problem.n, "point")
        p = as_vector(p, self.problem.n, "covector")
        rho = self.restrict(t, q, p)
        u = self.minimizer(t, q, rho, warm)
        H = float(rho @ u - self.lagr.value(t, q, u))
        return HamiltonianValue(H, u, rho)

    def grad(self, t, q, p, warm=None):
        q = as_vector(q, self.problem.n, "point")
        p = as_vector(p, self.problem.n, "covector")
        value = self.eval(t, q, p, warm)
        u = value.u
        frame = self.problem.frame
        dp = frame.X(t, q) @ u
        if frame.has_dX:
            dq = (-self.lagr.dq(t, q, u) +
                  np.einsum("l,lij,i->j", p, frame.dX(t, q), u))
        else:
            dq = numerics.fd_gradient(lambda x: self.eval(t, x, p, warm=u).H, q)
        return HamiltonianGradient(dq, dp, u, value.H)


def eval_H(dh, t, q, p, warm=None):
    return dh.eval(t, q, p, warm)


def grad_H(dh, t, q, p, warm=None):
    return dh.grad(t, q, p, warm)
