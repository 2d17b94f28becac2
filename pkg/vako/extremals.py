"""
Characteristics of the distribution along a horizontal curve and the
singularity tests built on them:

 - abnormal_test: covectors in the annihilator transported by the
   adjoint system and constrained at every sample
 - endpoint_map_oracle: brute force annihilator of the endpoint map image
 - contact_test: nondegeneracy of the symplectic form on the annihilator
 - constraint_submersion_test: full rank of the discrete constraint map

"""
import collections
import logging

import numpy as np
import scipy.linalg

from vako import numerics
from vako.common import (NULLSPACE_TOL, ContactVerdict, InconsistentControls,
                         Regularity, as_vector)
from vako.geometry import control_residual, integrate_horizontal, recover_controls

LOGGER = logging.getLogger(__name__)

# Control consistency required before transporting covectors
CONTROL_TOL = 1e-6

# Bump directions per control in the endpoint map oracle
ORACLE_BUMPS = 4
ORACLE_STEP = 1e-5
ORACLE_TOL = 1e-6

# Segments kept by the constraint submersion test
SUBMERSION_SEGMENTS = 200


Transport = collections.namedtuple("Transport", ("times", "Phi"))

AbnormalResult = collections.namedtuple("AbnormalResult", ("verdict", "basis"))

ContactResult = collections.namedtuple("ContactResult", ("verdict", "directions"))


class CharacteristicBasis:
    """
    Covector paths p(t) along a horizontal curve spanning the
    characteristics allowed by the boundary conditions.

    Attributes:
        paths: array (m, N, n), one covector per sample for each element
        initial: array (n, m), the initial covectors
        constraint_residual: max over t, i of |p(t) . X_i|

    """
    def __init__(self, curve, paths, initial, constraint_residual):
        self.curve = curve
        self.paths = paths
        self.initial = initial
        self.constraint_residual = constraint_residual

    def __len__(self):
        return len(self.paths)

    def __repr__(self):
        return f"<CharacteristicBasis(dim={len(self)})>"

    @property
    def dim(self):
        return len(self.paths)

    def at_end(self):
        """Columns spanning the characteristic covectors at the final time."""
        return self.paths[:, -1, :].T

    def norm_ratios(self):
        """min/max covector norm along each path."""
        norms = np.linalg.norm(self.paths, axis=2)
        return np.min(norms, axis=1) / np.max(norms, axis=1)


def _with_controls(problem, curve):
    if curve.u is None:
        u, _ = recover_controls(problem, curve)
        curve = curve.with_controls(u)
    residual = control_residual(problem, curve)
    allowed = CONTROL_TOL + 2.0 * curve.velocity_error_bound()
    if residual > allowed:
        raise InconsistentControls(
            f"Curve velocity differs from its controls by {residual:.3g} (allowed {allowed:.3g})")
    return curve


def transport_covectors(problem, curve):
    """
    Transition matrices of p' = -(sum_i u_i dX_i/dq)^T p along the curve,
    Phi(t0) = I, by RK4 with the generator linearly interpolated between
    samples.

    """
    curve = _with_controls(problem, curve)
    n = problem.n
    generators = np.array([-np.einsum("lij,i->lj", problem.frame.dX(t, q), u).T
                           for t, q, u in zip(curve.times, curve.q, curve.u)])
    Phi = np.empty((len(curve), n, n))
    Phi[0] = np.eye(n)
    for i in range(len(curve) - 1):
        h = curve.times[i + 1] - curve.times[i]
        G0, G1 = generators[i], generators[i + 1]
        Gm = 0.5 * (G0 + G1)
        k1 = G0 @ Phi[i]
        k2 = Gm @ (Phi[i] + h / 2 * k1)
        k3 = Gm @ (Phi[i] + h / 2 * k2)
        k4 = G1 @ (Phi[i] + h * k3)
        Phi[i + 1] = Phi[i] + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return Transport(curve.times, Phi)


def abnormal_test(problem, curve, P, Q, tol=NULLSPACE_TOL):
    """
    Look for nonzero covectors p(a) whose transport annihilates D at every
    sample and vanishes on T_P at a and on T_Q at b.

    Returns:
        AbnormalResult(Regular, None) or AbnormalResult(Singular, basis)

    """
    curve = _with_controls(problem, curve)
    Phi = transport_covectors(problem, curve).Phi
    weights = np.sqrt(np.gradient(curve.times))

    rows = [P.tangent_basis(curve.q[0]).T]
    for w, t, q, phi in zip(weights, curve.times, curve.q, Phi):
        rows.append(w * problem.frame.X(t, q).T @ phi)
    rows.append(Q.tangent_basis(curve.q[-1], check=False).T @ Phi[-1])
    kernel = numerics.nullspace(np.vstack(rows), tol)

    if kernel.shape[1] == 0:
        return AbnormalResult(Regularity.Regular, None)

    paths = np.einsum("sij,jm->msi", Phi, kernel)
    residual = max(float(np.max(np.abs(problem.frame.X(t, q).T @ paths[:, i, :].T)))
                   for i, (t, q) in enumerate(zip(curve.times, curve.q)))
    LOGGER.info("Curve is singular: %d dimensional characteristic space", kernel.shape[1])
    return AbnormalResult(Regularity.Singular,
                          CharacteristicBasis(curve, paths, kernel, residual))


def endpoint_map_oracle(problem, curve, P, n_bumps=ORACLE_BUMPS, step=ORACLE_STEP,
                        tol=ORACLE_TOL):
    """
    Annihilator of the image of the endpoint map differential, estimated by
    central differences over control bumps (n_bumps per control) and start
    moves along T_P.

    Returns:
        n x r array whose columns span the annihilator at the end point.

    """
    curve = _with_controls(problem, curve)
    times, u, q0 = curve.times, curve.u, curve.q[0]
    edges = np.linspace(times[0], times[-1], n_bumps + 1)

    def endpoint(start, controls):
        return integrate_horizontal(problem, times, start, controls).q[-1]

    columns = []
    for j in range(n_bumps):
        s = (times - edges[j]) / (edges[j + 1] - edges[j])
        bump = np.where((s > 0) & (s < 1), np.sin(np.pi * np.clip(s, 0, 1)) ** 2, 0.0)
        for i in range(problem.k):
            du = np.zeros_like(u)
            du[:, i] = step * bump
            columns.append((endpoint(q0, u + du) - endpoint(q0, u - du)) / (2 * step))
    for direction in P.tangent_basis(q0).T:
        plus = P.project(q0 + step * direction)
        minus = P.project(q0 - step * direction)
        columns.append((endpoint(plus, u) - endpoint(minus, u)) / (2 * step))

    J = np.column_stack(columns)
    return numerics.nullspace(J.T, tol)


def agreement_angle(characteristics, annihilator):
    """
    Largest principal angle between two covector subspaces given as
    columns; zero when both are empty, pi/2 when only one is.

    """
    a = np.asarray(characteristics, dtype=float)
    b = np.asarray(annihilator, dtype=float)
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return float(np.pi / 2)
    return float(np.max(scipy.linalg.subspace_angles(a, b)))


def contact_test(problem, points, t=0.0, tol=NULLSPACE_TOL, rho=None):
    """
    Rank of the symplectic form restricted to the tangent space of the
    annihilator, in graph coordinates (q, rho) -> theta(q)^T rho, at each
    sample point.

    Returns:
        A ContactResult per point; directions holds the q components of the
        kernel when degenerate.

    """
    n, m = problem.n, problem.corank
    results = []
    if m == 0:
        return [ContactResult(ContactVerdict.NondegenerateOnAnnihilator, None)
                for _ in np.atleast_2d(points)]

    rho = np.ones(m) if rho is None else as_vector(rho, m, "annihilator coordinates")
    omega = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    for q in np.atleast_2d(points):
        theta = problem.frame.theta(t, q)
        dtheta = problem.frame.dtheta(t, q)
        tangent = np.block([[np.eye(n), np.zeros((n, m))],
                            [np.einsum("a,alj->lj", rho, dtheta), theta.T]])
        W = tangent.T @ omega @ tangent
        kernel = numerics.nullspace(W, tol)
        if kernel.shape[1]:
            results.append(ContactResult(ContactVerdict.Degenerate, kernel[:n]))
        else:
            results.append(ContactResult(ContactVerdict.NondegenerateOnAnnihilator, None))
    return results


def constraint_submersion_test(problem, curve, P, Q, tol=NULLSPACE_TOL):
    """
    Regular iff the differential of the discrete constraint map
    theta(midpoint) . (q_{i+1} - q_i), taken over curves with start on P
    and end on Q, has full row rank.

    """
    m = problem.corank
    if m == 0:
        return Regularity.Regular
    keep = np.unique(np.linspace(0, len(curve) - 1,
                                 min(len(curve), SUBMERSION_SEGMENTS + 1)).round().astype(int))
    times, q = curve.times[keep], curve.q[keep]
    N, n = len(keep) - 1, problem.n

    J = np.zeros((N * m, (N + 1) * n))
    for i in range(N):
        mid = 0.5 * (q[i] + q[i + 1])
        t_mid = 0.5 * (times[i] + times[i + 1])
        dq = q[i + 1] - q[i]
        theta = problem.frame.theta(t_mid, mid)
        bend = 0.5 * np.einsum("alj,l->aj", problem.frame.dtheta(t_mid, mid), dq)
        rows = slice(i * m, (i + 1) * m)
        J[rows, i * n:(i + 1) * n] = -theta + bend
        J[rows, (i + 1) * n:(i + 2) * n] = theta + bend

    T_P = P.tangent_basis(q[0])
    T_Q = Q.tangent_basis(q[-1], check=False)
    restricted = np.hstack([J[:, :n] @ T_P, J[:, n:N * n], J[:, N * n:] @ T_Q])
    if numerics.rank(restricted, tol) == N * m:
        return Regularity.Regular
    return Regularity.Singular
