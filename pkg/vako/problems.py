"""
Built-in problem corpus, and assembly of inline polynomial problems.

Every problem is checked on construction: annihilator property and frame
conditioning at seeded random points, positive definite metric, and
agreement of the analytic fiber derivatives with finite differences.

"""
import logging
import re

import numpy as np

from vako import numerics
from vako.common import DimensionMismatch, NotHyperRegular, UnknownProblem
from vako.geometry import ChartProblem, DistributionFrame, Point
from vako.hamiltonian import (ConstrainedLagrangian, DegenerateHamiltonian,
                              SubRiemannianData, check_subriemannian,
                              make_subriemannian)
from vako.polynomial import Polynomial, PolynomialArray

LOGGER = logging.getLogger(__name__)

# Frame condition required of builtin problems at check points
BUILTIN_COND_LIMIT = 1e6

CHECK_POINTS = 100
CHECK_SEED = 7
CHECK_BOX = 2.0

DEFAULT_FLAT_DIM = 3


class BuiltinProblem:
    """
    A chart problem with its Lagrangian and Hamiltonian, a default
    boundary value problem and the facts it is known to satisfy.

    """
    def __init__(self, name, chart, lagr, default_bvp=None, facts=None):
        self.name = name
        self.chart = chart
        self.lagr = lagr
        self.dh = DegenerateHamiltonian(lagr)
        self.default_bvp = default_bvp or {}
        self.facts = facts or []

    def __repr__(self):
        return f"<BuiltinProblem({self.name}, n={self.n}, k={self.k})>"

    @property
    def n(self):
        return self.chart.n

    @property
    def k(self):
        return self.chart.k

    @property
    def autonomous(self):
        return self.lagr.autonomous

    def check_points(self, count=CHECK_POINTS, seed=CHECK_SEED):
        rng = np.random.default_rng(seed)
        return rng.uniform(-CHECK_BOX, CHECK_BOX, (count, self.n))

    def self_check(self, metric=None):
        points = self.check_points()
        self.chart.self_check(points, cond_limit=BUILTIN_COND_LIMIT)
        if metric is not None:
            check_subriemannian(metric, points)
        for q in points[:5]:
            base = (0.0, q)
            self.lagr.fiber.spot_check(base)
            cond = numerics.cond_estimate(self.lagr.d2u(0.0, q, np.zeros(self.k)))
            if cond > 1e10:
                raise NotHyperRegular(f"Fiber Hessian of {self.name} is singular at q={q}")
        LOGGER.debug("Problem %s passed its self checks", self.name)
        return self


# -----------------------------------------------------------
# Frames
# -----------------------------------------------------------
def flat_frame(n, k):
    eye = np.eye(n)
    return DistributionFrame(
        X=lambda t, q: eye[:, :k],
        theta=lambda t, q: eye[k:, :],
        Xprime=lambda t, q: eye[:, k:],
        dX=lambda t, q: np.zeros((n, k, n)),
        dtheta=lambda t, q: np.zeros((n - k, n, n)))


def heisenberg_frame():
    def X(t, q):
        x, y, _ = q
        return np.array([[1.0, 0.0], [0.0, 1.0], [-y / 2, x / 2]])

    def theta(t, q):
        x, y, _ = q
        return np.array([[y / 2, -x / 2, 1.0]])

    def dX(t, q):
        d = np.zeros((3, 2, 3))
        d[2, 0, 1] = -0.5
        d[2, 1, 0] = 0.5
        return d

    def dtheta(t, q):
        d = np.zeros((1, 3, 3))
        d[0, 0, 1] = 0.5
        d[0, 1, 0] = -0.5
        return d

    return DistributionFrame(X, theta, lambda t, q: np.array([[0.0], [0.0], [1.0]]),
                             dX=dX, dtheta=dtheta)


def martinet_frame():
    def X(t, q):
        y = q[1]
        return np.array([[1.0, 0.0], [0.0, 1.0], [y * y / 2, 0.0]])

    def theta(t, q):
        y = q[1]
        return np.array([[-y * y / 2, 0.0, 1.0]])

    def dX(t, q):
        d = np.zeros((3, 2, 3))
        d[2, 0, 1] = q[1]
        return d

    def dtheta(t, q):
        d = np.zeros((1, 3, 3))
        d[0, 0, 1] = -q[1]
        return d

    return DistributionFrame(X, theta, lambda t, q: np.array([[0.0], [0.0], [1.0]]),
                             dX=dX, dtheta=dtheta)


def _unit_metric(k, n, potential=None, dV=None):
    return SubRiemannianData(lambda t, q: np.eye(k), potential=potential, dV=dV,
                             dmetric=lambda t, q: np.zeros((k, k, n)))


# -----------------------------------------------------------
# Builtins
# -----------------------------------------------------------
def _flat(k, dim=None):
    n = DEFAULT_FLAT_DIM if dim is None else int(dim)
    n = max(n, k)
    if k < 1:
        raise UnknownProblem("flat problems need k >= 1")
    chart = ChartProblem(n, k, flat_frame(n, k), name=f"flat-{k}")
    metric = _unit_metric(k, n)
    target = np.ones(n)
    target[k:] = 0.0
    problem = BuiltinProblem(
        f"flat-{k}", chart, make_subriemannian(metric, chart),
        default_bvp={"P": Point(np.zeros(n)), "Q": Point(target), "anchor_p": np.zeros(n)},
        facts=["Straight lines u = const are the solutions",
               f"BVP 0 -> {target.tolist()} has action {0.5 * k}"])
    return problem.self_check(metric)


def _heisenberg(potential=False):
    chart = ChartProblem(3, 2, heisenberg_frame(),
                         name="heisenberg-potential" if potential else "heisenberg")
    if potential:
        metric = _unit_metric(2, 3, potential=lambda q: 0.5 * q[2] ** 2,
                              dV=lambda q: np.array([0.0, 0.0, q[2]]))
    else:
        metric = _unit_metric(2, 3)
    facts = ["theta(X_1) = theta(X_2) = 0 identically",
             "The distribution is contact: nonconstant horizontal curves are regular",
             "H = 1/2 [(p_x - y p_z / 2)^2 + (p_y + x p_z / 2)^2]" + (" + z^2 / 2" if potential else "")]
    if not potential:
        facts.append("Normal extremal from 0 with p0 = (1, 0, 2 pi) closes its circle at t = 1")
    problem = BuiltinProblem(
        chart.name, chart, make_subriemannian(metric, chart),
        default_bvp={"P": Point(np.zeros(3)), "Q": Point([1.0, 0.0, 0.0]),
                     "anchor_p": np.array([0.9, 0.1, 0.1])},
        facts=facts)
    return problem.self_check(metric)


def _martinet():
    chart = ChartProblem(3, 2, martinet_frame(), name="martinet")
    metric = _unit_metric(2, 3)
    problem = BuiltinProblem(
        "martinet", chart, make_subriemannian(metric, chart),
        default_bvp={"P": Point(np.zeros(3)), "Q": Point([0.0, 1.0, 0.0]),
                     "anchor_p": np.array([0.1, 0.9, 0.0])},
        facts=["The line t -> (t, 0, 0) is singular with a one dimensional characteristic",
               "The symplectic form degenerates on the annihilator exactly on y = 0"])
    return problem.self_check(metric)


def _driven_flat():
    n, k = 3, 2
    chart = ChartProblem(n, k, flat_frame(n, k), name="driven-flat")

    def L(t, q, u):
        return 0.5 * u @ u - np.sin(t) * q[0]

    lagr = ConstrainedLagrangian(
        chart, L,
        dL_dq=lambda t, q, u: np.array([-np.sin(t), 0.0, 0.0]),
        dL_du=lambda t, q, u: np.asarray(u, dtype=float),
        d2L_du2=lambda t, q, u: np.eye(k),
        inverse=lambda t, q, rho: np.asarray(rho, dtype=float),
        autonomous=False)
    problem = BuiltinProblem(
        "driven-flat", chart, lagr,
        default_bvp={"P": Point(np.zeros(n)), "Q": Point([1.0, 0.0, 0.0]),
                     "anchor_p": np.zeros(n)},
        facts=["Time dependent: no energy conservation",
               "p_x(t) = p_x(0) - 1 + cos(t)"])
    return problem.self_check()


_BUILTINS = {
    "heisenberg": lambda dim: _heisenberg(),
    "heisenberg-potential": lambda dim: _heisenberg(potential=True),
    "martinet": lambda dim: _martinet(),
    "driven-flat": lambda dim: _driven_flat(),
}

_FLAT_RE = re.compile(r"^flat-(\d+)$")


def names():
    return ["flat-k"] + sorted(_BUILTINS)


def builtin(name, dim=None):
    """
    Build a builtin by name. flat-<k> takes the ambient dimension from dim
    (3 by default, at least k).

    """
    match = _FLAT_RE.match(name)
    if match:
        return _flat(int(match.group(1)), dim)
    if name not in _BUILTINS:
        raise UnknownProblem(f"Unknown problem '{name}' (known: {', '.join(names())})")
    if dim is not None and dim != 3:
        raise DimensionMismatch(f"Problem {name} lives in dimension 3")
    LOGGER.info("Building builtin problem %s", name)
    return _BUILTINS[name](dim)


# -----------------------------------------------------------
# Inline problems
# -----------------------------------------------------------
def from_inline(spec):
    """
    Build a problem from polynomial coefficients. spec holds n, k, frame,
    annihilator, complement and either metric (with optional potential)
    or lagrangian, as in the problem file "inline" block.

    """
    n, k = int(spec["n"]), int(spec["k"])
    frame_arr = PolynomialArray(spec["frame"], n)
    if frame_arr.shape != (k, n):
        raise DimensionMismatch(f"Inline frame must be {k} vectors of {n} polynomials")

    if k < n:
        theta_arr = PolynomialArray(spec["annihilator"], n)
        prime_arr = PolynomialArray(spec["complement"], n)
        if theta_arr.shape != (n - k, n) or prime_arr.shape != (n - k, n):
            raise DimensionMismatch(
                f"Inline annihilator and complement must hold {n - k} rows of {n} polynomials")
        theta = lambda t, q: theta_arr(q)
        dtheta = lambda t, q: theta_arr.jacobian(q)
        Xprime = lambda t, q: prime_arr(q).T
    else:
        theta = lambda t, q: np.zeros((0, n))
        dtheta = lambda t, q: np.zeros((0, n, n))
        Xprime = lambda t, q: np.zeros((n, 0))

    frame = DistributionFrame(
        X=lambda t, q: frame_arr(q).T,
        theta=theta,
        Xprime=Xprime,
        dX=lambda t, q: np.transpose(frame_arr.jacobian(q), (1, 0, 2)),
        dtheta=dtheta)
    name = spec.get("name", "inline")
    chart = ChartProblem(n, k, frame, name=name)

    metric = None
    if spec.get("lagrangian") is not None:
        poly = Polynomial(spec["lagrangian"], n + k)
        grads = poly.gradient_polynomials()
        hess = [[g.derivative(n + j) for j in range(k)] for g in grads[n:]]

        def L(t, q, u):
            return poly(np.concatenate([q, u]))

        def dL_dq(t, q, u):
            x = np.concatenate([q, u])
            return np.array([g(x) for g in grads[:n]])

        def dL_du(t, q, u):
            x = np.concatenate([q, u])
            return np.array([g(x) for g in grads[n:]])

        def d2L_du2(t, q, u):
            x = np.concatenate([q, u])
            return np.array([[h(x) for h in row] for row in hess])

        lagr = ConstrainedLagrangian(chart, L, dL_dq=dL_dq, dL_du=dL_du, d2L_du2=d2L_du2)
    else:
        metric_arr = PolynomialArray(spec["metric"], n)
        if metric_arr.shape != (k, k):
            raise DimensionMismatch(f"Inline metric must be {k} x {k}")
        potential = None
        dV = None
        if spec.get("potential") is not None:
            potential_poly = Polynomial(spec["potential"], n)
            potential_grads = potential_poly.gradient_polynomials()
            potential = potential_poly
            dV = lambda q: np.array([g(q) for g in potential_grads])
        metric = SubRiemannianData(lambda t, q: metric_arr(q), potential=potential, dV=dV,
                                   dmetric=lambda t, q: metric_arr.jacobian(q))
        lagr = make_subriemannian(metric, chart)

    problem = BuiltinProblem(name, chart, lagr)
    return problem.self_check(metric)
