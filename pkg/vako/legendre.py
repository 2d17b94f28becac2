"""
Fiberwise Legendre transform: energy, fiber derivative, numerical
inversion of the fiber derivative and the invariants tying Z to Z*.

A fiber map is evaluated at a base point (in practice the pair (t, q))
and a fiber point v in R^m. The base is passed through to the callbacks
untouched.

"""
import collections
import logging

import numpy as np

from vako import numerics
from vako.common import (MaxIterations, NotHyperRegular, VakoError,
                         as_vector, check_finite)

LOGGER = logging.getLogger(__name__)

# Fiber Hessians with a condition estimate above this break hyper-regularity
HESSIAN_COND_LIMIT = 1e10

# Fiber dimension limit for transforms
MAX_FIBER_DIM = 32

# Seeded restarts for cold inversions, and distance separating distinct roots
RESTARTS = 8
RESTART_SEED = 20
ROOT_SEPARATION = 1e-6

# Agreement required between supplied derivative callbacks and differences
SPOT_CHECKS = 5
SPOT_CHECK_TOL = 1e-5

# Newton tolerance for transforms that get finite differenced
DIFFERENCED_TOL = 1e-12


LegendreValue = collections.namedtuple("LegendreValue", ("value", "v"))

InvariantReport = collections.namedtuple(
    "InvariantReport",
    ("involution", "mutual_inverse", "derivative_inversion", "envelope"))


class FiberMap:
    """
    A C2 function Z(base, v) on the fibers, with optional analytic fiber
    gradient dZ(base, v) and fiber Hessian d2Z(base, v).

    When derivative callbacks are supplied and check_base is given, they are
    compared with finite differences at a few seeded fiber points.

    """
    def __init__(self, Z, dim, dZ=None, d2Z=None, check_base=None):
        if not 1 <= int(dim) <= MAX_FIBER_DIM:
            raise ValueError(f"Fiber dimension must lie in [1, {MAX_FIBER_DIM}]")
        self._Z = Z
        self._dZ = dZ
        self._d2Z = d2Z
        self.dim = int(dim)

        if check_base is not None and (dZ is not None or d2Z is not None):
            self.spot_check(check_base)

    def __repr__(self):
        return f"<FiberMap(dim={self.dim})>"

    def value(self, base, v):
        return float(check_finite(self._Z(base, as_vector(v, self.dim, "fiber point")),
                                  "fiber map"))

    def gradient(self, base, v):
        v = as_vector(v, self.dim, "fiber point")
        if self._dZ is not None:
            return check_finite(as_vector(self._dZ(base, v), self.dim), "fiber gradient")
        return numerics.fd_gradient(lambda w: self._Z(base, w), v)

    def hessian(self, base, v):
        v = as_vector(v, self.dim, "fiber point")
        if self._d2Z is not None:
            H = np.asarray(self._d2Z(base, v), dtype=float).reshape(self.dim, self.dim)
            return check_finite(H, "fiber Hessian")
        H = numerics.fd_jacobian(lambda w: self.gradient(base, w), v, rel_step=1e-5)
        return 0.5 * (H + H.T)

    def spot_check(self, base, seed=0):
        rng = np.random.default_rng(seed)
        for _ in range(SPOT_CHECKS):
            v = rng.uniform(-1.0, 1.0, self.dim)
            if self._dZ is not None:
                fd = numerics.fd_gradient(lambda w: self._Z(base, w), v)
                _compare(self.gradient(base, v), fd, "fiber gradient", v)
            if self._d2Z is not None:
                fd = numerics.fd_jacobian(lambda w: self.gradient(base, w), v,
                                          rel_step=1e-5)
                _compare(self.hessian(base, v), fd, "fiber Hessian", v)


def _compare(analytic, fd, what, v):
    deviation = float(np.max(np.abs(analytic - fd) / (1.0 + np.abs(fd))))
    if deviation > SPOT_CHECK_TOL:
        raise VakoError(f"Supplied {what} disagrees with finite differences "
                        f"by {deviation:.3g} at v={v}")


def energy(Z, base, v):
    """
    E_Z(v) = dZ(v) v - Z(v).

    """
    v = as_vector(v, Z.dim, "fiber point")
    return float(Z.gradient(base, v) @ v - Z.value(base, v))


def fiber_derivative(Z, base, v):
    return Z.gradient(base, v)


def _invert(Z, base, p, start, cfg):
    return numerics.newton_solve(lambda v: Z.gradient(base, v) - p, start, cfg,
                                 jac=lambda v: Z.hessian(base, v),
                                 line_search=True)


def _cold_starts(Z, p):
    rng = np.random.default_rng(RESTART_SEED)
    radius = 1.0 + float(np.linalg.norm(p))
    yield np.zeros(Z.dim)
    for _ in range(RESTARTS):
        direction = rng.normal(size=Z.dim)
        direction /= np.linalg.norm(direction)
        yield radius * rng.uniform() ** (1.0 / Z.dim) * direction


def inverse_fiber_derivative(Z, base, p, guess=None, cfg=None, check_unique=False):
    """
    Solve dZ(v) = p for v.

    A warm start is tried first when given. Cold calls start at v = 0 and
    fall back to seeded restarts in a ball of radius 1 + |p|. With
    check_unique every start is run and distinct roots raise
    NotHyperRegular.

    """
    cfg = cfg or numerics.NewtonConfig()
    p = as_vector(p, Z.dim, "dual fiber point")

    if guess is not None and not check_unique:
        try:
            return _checked_root(Z, base, _invert(Z, base, p, guess, cfg).x)
        except VakoError as err:
            LOGGER.debug("Warm started inversion failed (%s), trying cold starts", err)

    roots = []
    best = np.inf
    for attempt, start in enumerate(_cold_starts(Z, p)):
        try:
            root = _invert(Z, base, p, start, cfg).x
        except MaxIterations as err:
            best = min(best, err.best_residual if err.best_residual is not None else np.inf)
            continue
        except VakoError as err:
            LOGGER.debug("Inversion start %d failed: %s", attempt, err)
            continue
        if attempt and not roots:
            LOGGER.debug("Inversion converged from restart %d", attempt)
        if not check_unique:
            return _checked_root(Z, base, root)
        if not any(np.linalg.norm(root - r) <= ROOT_SEPARATION for r in roots):
            roots.append(root)

    if len(roots) > 1:
        raise NotHyperRegular(
            f"Fiber derivative is not injective: {len(roots)} distinct preimages of p={p}")
    if roots:
        return _checked_root(Z, base, roots[0])
    raise MaxIterations(f"Could not invert the fiber derivative at p={p}",
                        best_residual=best)


def _checked_root(Z, base, v):
    cond = numerics.cond_estimate(Z.hessian(base, v))
    if cond > HESSIAN_COND_LIMIT:
        raise NotHyperRegular(
            f"Fiber Hessian is singular at v={v} (condition estimate {cond:.3g})")
    return v


def legendre_transform(Z, base, p, guess=None, cfg=None, check_unique=False):
    """
    Evaluate Z*(p) = E_Z(dZ^-1(p)).

    Returns:
        LegendreValue(value=Z*(p), v=dZ^-1(p))

    """
    v = inverse_fiber_derivative(Z, base, p, guess, cfg, check_unique)
    return LegendreValue(energy(Z, base, v), v)


def conjugate(Z, cfg=None):
    """
    The transform Z* as a fiber map on the dual fiber, with analytic
    gradient dZ^-1 and Hessian (d2Z)^-1 at the preimage.

    """
    def zstar(base, p):
        return legendre_transform(Z, base, p, cfg=cfg).value

    def dzstar(base, p):
        return inverse_fiber_derivative(Z, base, p, cfg=cfg)

    def d2zstar(base, p):
        v = inverse_fiber_derivative(Z, base, p, cfg=cfg)
        return np.linalg.inv(Z.hessian(base, v))

    return FiberMap(zstar, Z.dim, dZ=dzstar, d2Z=d2zstar)


def involution_check(Z, base, samples, cfg=None):
    """
    max |Z**(v) - Z(v)| over the sample fiber points. The outer inversion
    starts from the image of the fiber origin, not from the known answer.

    """
    Zstar = conjugate(Z, cfg)
    guess = fiber_derivative(Z, base, np.zeros(Z.dim))
    worst = 0.0
    for v in np.atleast_2d(samples):
        double = legendre_transform(Zstar, base, v, guess=guess, cfg=cfg).value
        worst = max(worst, abs(double - Z.value(base, v)))
    return worst


def _split_base(base):
    t, q = base
    return float(t), as_vector(q)


def invariant_suite(Z, bases, samples, cfg=None, check_unique=True):
    """
    Run the involution, mutual inverse, derivative inversion and envelope
    checks of Z at paired base and fiber samples. Bases are (t, q) pairs;
    the envelope derivative is taken in q.

    Returns:
        InvariantReport of max deviations.

    """
    cfg = cfg or numerics.NewtonConfig()
    tight = cfg.replace(abs_tolerance=min(cfg.abs_tolerance, DIFFERENCED_TOL))
    Zstar = conjugate(Z, tight)
    involution = mutual = derivative = envelope = 0.0

    for base, v in zip(bases, np.atleast_2d(samples)):
        t, q = _split_base(base)
        p = fiber_derivative(Z, base, v)
        v_back = inverse_fiber_derivative(Z, base, p, cfg=cfg, check_unique=check_unique)
        mutual = max(mutual, float(np.max(np.abs(v_back - v))))

        p_half = fiber_derivative(Z, base, 0.5 * v)
        image = fiber_derivative(Z, base, inverse_fiber_derivative(Z, base, p_half, cfg=cfg))
        mutual = max(mutual, float(np.max(np.abs(image - p_half))))

        involution = max(involution, involution_check(Z, base, [v], cfg))

        grad_star = numerics.fd_gradient(lambda w: Zstar.value(base, w), p)
        derivative = max(derivative, float(np.max(np.abs(grad_star - v_back))))

        if q.size:
            dq_star = numerics.fd_gradient(
                lambda x: legendre_transform(Z, (t, x), p, guess=v_back, cfg=tight).value, q)
            dq = numerics.fd_gradient(lambda x: Z.value((t, x), v_back), q)
            envelope = max(envelope, float(np.max(np.abs(dq_star + dq))))

    LOGGER.info("Legendre invariants: involution %.3e, mutual inverse %.3e, "
                "derivative inversion %.3e, envelope %.3e",
                involution, mutual, derivative, envelope)
    return InvariantReport(involution, mutual, derivative, envelope)
