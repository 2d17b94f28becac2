"""
Lagrangian side of the critical point correspondence: the action of a
discrete curve, the extended and multiplier Lagrangians on full
velocities, Euler-Lagrange residuals, discrete first variations along
horizontal-compatible fields and recovery of the multiplier from a lift.

"""
import collections
import logging
import math

import numpy as np
import scipy.integrate
import scipy.linalg

from vako import numerics
from vako.common import (NonHorizontal, NotPositiveDefinite, DimensionMismatch,
                         DiscreteCurve, as_vector)
from vako.geometry import (eval_split, horizontality_residual, recover_controls,
                           integrate_horizontal, Whole)

LOGGER = logging.getLogger(__name__)

# Control recovery residual allowed when computing an action
ACTION_HORIZONTAL_TOL = 1e-4

# Horizontality residual allowed on a perturbed curve
PERTURBED_HORIZONTAL_TOL = 1e-2

# Samples per interior bump of the default variation basis
SAMPLES_PER_BUMP = 25


ELResidual = collections.namedtuple("ELResidual", ("vectors", "max"))

FirstVariation = collections.namedtuple("FirstVariation", ("derivatives", "max"))

Multiplier = collections.namedtuple("Multiplier", ("times", "values", "smoothness"))


def _quadrature(values, curve):
    if len(curve) > 2 and curve.is_uniform:
        return float(scipy.integrate.simpson(values, x=curve.times))
    return float(scipy.integrate.trapezoid(values, x=curve.times))


def _action_with_controls(lagr, curve, u):
    values = [lagr.value(t, q, uu) for t, q, uu in zip(curve.times, curve.q, u)]
    return _quadrature(np.asarray(values), curve)


def action(lagr, curve):
    """
    Simpson (uniform grids) or trapezoid quadrature of L(t, q, u) along the
    curve. Missing controls are recovered by least squares in the frame.

    """
    u = curve.u
    if u is None:
        u, residual = recover_controls(lagr.problem, curve)
        if residual > ACTION_HORIZONTAL_TOL:
            raise NonHorizontal(f"Curve is not horizontal (control residual {residual:.3g})")
    return _action_with_controls(lagr, curve, u)


class ExtendedLagrangian:
    """
    L~(t, q, w) = L(t, q, pi_D w) + 1/2 g'(pi_D' w, pi_D' w), defined on
    full velocities w with g' a constant SPD matrix in the complement
    frame coordinates.

    """
    def __init__(self, lagr, gprime):
        problem = lagr.problem
        gprime = np.asarray(gprime, dtype=float).reshape(problem.corank, problem.corank)
        if problem.corank:
            try:
                scipy.linalg.cholesky(gprime)
            except np.linalg.LinAlgError:
                raise NotPositiveDefinite("Complement metric is not positive definite") from None
            if not np.allclose(gprime, gprime.T, atol=1e-12):
                raise NotPositiveDefinite("Complement metric is not symmetric")
        self.lagr = lagr
        self.problem = problem
        self.gprime = gprime

    def value(self, t, q, w):
        split = eval_split(self.problem, t, q)
        w = as_vector(w, self.problem.n, "velocity")
        c = split.complement_coords(w)
        return self.lagr.value(t, q, split.frame_coords(w)) + 0.5 * c @ self.gprime @ c

    def velocity_gradient(self, t, q, w):
        return numerics.fd_gradient(lambda x: self.value(t, q, x), w)

    def position_gradient(self, t, q, w):
        return numerics.fd_gradient(lambda x: self.value(t, x, w), q)


class MultiplierLagrangian(ExtendedLagrangian):
    """
    L~_lambda(t, q, w) = L~(t, q, w) - lambda(t) theta(t, q) w, with lambda
    given by samples and linearly interpolated in time.

    """
    def __init__(self, extended, times, lam):
        super().__init__(extended.lagr, extended.gprime)
        self.times = np.asarray(times, dtype=float)
        self.lam = np.asarray(lam, dtype=float).reshape(len(self.times), self.problem.corank)

    def multiplier(self, t):
        return np.array([np.interp(t, self.times, column) for column in self.lam.T])

    def value(self, t, q, w):
        base = super().value(t, q, w)
        if not self.problem.corank:
            return base
        theta = self.problem.frame.theta(t, as_vector(q))
        return base - self.multiplier(t) @ theta @ as_vector(w)


def extended_lagrangian(lagr, gprime):
    return ExtendedLagrangian(lagr, gprime)


def multiplier_lagrangian(Ltilde, times, lam):
    return MultiplierLagrangian(Ltilde, times, lam)


def el_residual(Ltilde, curve):
    """
    d/dt (dL~/dw) - dL~/dq at every sample, velocities and the time
    derivative by centered differences. The max skips the two samples at
    each end, whose time derivative involves a one-sided velocity.

    """
    if len(curve) < 5:
        raise DimensionMismatch("Euler-Lagrange residual needs at least 5 samples")
    velocities = curve.velocities()
    momenta = np.array([Ltilde.velocity_gradient(t, q, w)
                        for t, q, w in zip(curve.times, curve.q, velocities)])
    forces = np.array([Ltilde.position_gradient(t, q, w)
                       for t, q, w in zip(curve.times, curve.q, velocities)])
    vectors = np.gradient(momenta, curve.times, axis=0, edge_order=2) - forces
    interior = np.linalg.norm(vectors[2:-2], axis=1)
    return ELResidual(vectors, float(np.max(interior)))


# -----------------------------------------------------------
# Variations
# -----------------------------------------------------------
class VariationBasis:
    """
    Horizontal-compatible vector fields along a curve: the linearized
    responses to control bumps and to moves of the start point along P,
    combined so that the end displacement lies in T_Q.

    Each field i comes with the control perturbation (controls[i]) and the
    start displacement (starts[i]) that drive it.

    """
    def __init__(self, curve, fields, controls, starts):
        self.curve = curve
        self.fields = np.asarray(fields, dtype=float)
        self.controls = np.asarray(controls, dtype=float)
        self.starts = np.asarray(starts, dtype=float)

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def __getitem__(self, index):
        return self.fields[index]

    def __repr__(self):
        return f"<VariationBasis({len(self)} fields)>"


def _bump(times, start, stop):
    s = (times - start) / (stop - start)
    return np.where((s > 0) & (s < 1), np.sin(np.pi * np.clip(s, 0, 1)) ** 4, 0.0)


def _linear_response(times, A, frames, du, v0):
    """
    RK4 for v' = A(t) v + X(t) du(t) with A_lj = sum_i u_i dX_i^l/dq_j,
    coefficients linearly interpolated between samples.

    """
    B = np.einsum("sli,si->sl", frames, du)
    v = np.empty((len(times), A.shape[1]))
    v[0] = v0
    for i in range(len(times) - 1):
        h = times[i + 1] - times[i]
        A_mid, B_mid = 0.5 * (A[i] + A[i + 1]), 0.5 * (B[i] + B[i + 1])
        k1 = A[i] @ v[i] + B[i]
        k2 = A_mid @ (v[i] + h / 2 * k1) + B_mid
        k3 = A_mid @ (v[i] + h / 2 * k2) + B_mid
        k4 = A[i + 1] @ (v[i] + h * k3) + B[i + 1]
        v[i + 1] = v[i] + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return v


def _controls_of(problem, curve):
    if curve.u is not None:
        return curve.u
    u, residual = recover_controls(problem, curve)
    if residual > ACTION_HORIZONTAL_TOL:
        raise NonHorizontal(f"Curve is not horizontal (control residual {residual:.3g})")
    return u


def variation_basis(problem, curve, P, Q, n_bumps=None):
    """
    Build the default variation basis: n_bumps interior bumps per control
    direction (one per 25 samples when omitted) plus the T_P directions at
    the start, combined so the end displacement is tangent to Q.

    """
    u = _controls_of(problem, curve)
    N, n, k = len(curve), problem.n, problem.k
    if n_bumps is None:
        n_bumps = math.ceil(N / SAMPLES_PER_BUMP)
    edges = np.linspace(curve.times[0], curve.times[-1], n_bumps + 1)

    controls, starts = [], []
    for j in range(n_bumps):
        bump = _bump(curve.times, edges[j], edges[j + 1])
        for i in range(k):
            du = np.zeros((N, k))
            du[:, i] = bump
            controls.append(du)
            starts.append(np.zeros(n))
    T_P = P.tangent_basis(curve.q[0])
    for column in T_P.T:
        controls.append(np.zeros((N, k)))
        starts.append(column)

    A = np.array([np.einsum("lij,i->lj", problem.frame.dX(t, q), uu)
                  for t, q, uu in zip(curve.times, curve.q, u)])
    frames = np.array([problem.frame.X(t, q) for t, q in zip(curve.times, curve.q)])
    responses = np.array([_linear_response(curve.times, A, frames, du, v0)
                          for du, v0 in zip(controls, starts)])
    if isinstance(Q, Whole):
        combos = np.eye(len(responses))
    else:
        T_Q = Q.tangent_basis(curve.q[-1], check=False)
        normal = numerics.nullspace(T_Q.T) if T_Q.shape[1] else np.eye(n)
        combos = numerics.nullspace(normal.T @ responses[:, -1, :].T)

    fields = np.einsum("mc,mij->cij", combos, responses)
    control_fields = np.einsum("mc,mij->cij", combos, np.asarray(controls))
    start_fields = combos.T @ np.asarray(starts)
    LOGGER.debug("Variation basis: %d fields from %d responses", len(fields), len(responses))
    return VariationBasis(curve, fields, control_fields, start_fields)


def perturbed_curve(problem, curve, basis, index, amplitude, P=None):
    """
    Drive the curve's controls and start point along basis field index.
    The displacement added to the curve is the difference of two
    horizontal integrations, so a zero amplitude returns the curve.

    """
    u = _controls_of(problem, curve)
    q0 = curve.q[0]
    start = q0 + amplitude * basis.starts[index]
    if P is not None:
        start = P.project(start)
    moved = integrate_horizontal(problem, curve.times, start,
                                 u + amplitude * basis.controls[index])
    reference = integrate_horizontal(problem, curve.times, q0, u)
    return DiscreteCurve(curve.times, curve.q + moved.q - reference.q)


def _reprojected_action(lagr, curve):
    problem = lagr.problem
    residual = horizontality_residual(problem, curve)
    if residual.max > PERTURBED_HORIZONTAL_TOL:
        raise NonHorizontal(
            f"Perturbed curve leaves the distribution (residual {residual.max:.3g})")
    velocities = curve.velocities()
    u = np.array([eval_split(problem, t, q).frame_coords(v)
                  for t, q, v in zip(curve.times, curve.q, velocities)])
    return _action_with_controls(lagr, curve, u)


def first_variation(lagr, curve, basis, eps=1e-4):
    """
    Central difference of the action along each basis field, the
    perturbed velocities re-projected onto D along D'.

    """
    if not 1e-6 <= eps <= 1e-2:
        raise ValueError("eps must lie in [1e-6, 1e-2]")
    derivatives = np.empty(len(basis))
    for i, field in enumerate(basis):
        plus = DiscreteCurve(curve.times, curve.q + eps * field)
        minus = DiscreteCurve(curve.times, curve.q - eps * field)
        derivatives[i] = (_reprojected_action(lagr, plus) -
                          _reprojected_action(lagr, minus)) / (2.0 * eps)
    worst = float(np.max(np.abs(derivatives))) if len(derivatives) else 0.0
    LOGGER.debug("First variation over %d fields: max %.3e", len(basis), worst)
    return FirstVariation(derivatives, worst)


def recover_multiplier(problem, path):
    """
    lambda(t) solving lambda . theta(X'_j) = -p . X'_j at every sample,
    with the max centered second difference as smoothness diagnostic.

    """
    m = problem.corank
    values = np.zeros((len(path.times), m))
    if m:
        for i, (t, q, p) in enumerate(zip(path.times, path.q, path.p)):
            problem.frame_matrix(t, q)
            Xp = problem.frame.Xprime(t, q)
            values[i] = np.linalg.solve((problem.frame.theta(t, q) @ Xp).T, -Xp.T @ p)
    smoothness = 0.0
    if m and len(values) > 2:
        smoothness = float(np.max(np.abs(np.diff(values, n=2, axis=0))))
    return Multiplier(path.times, values, smoothness)


def energy_identity(lagr, path):
    """
    max |H - E_L| along a path, with E_L = dL/du . u - L the Lagrangian
    energy of the recorded controls.

    """
    deviation = [abs(H - lagr.energy(t, q, u))
                 for t, q, u, H in zip(path.times, path.q, path.u, path.H)]
    return float(np.max(deviation))
