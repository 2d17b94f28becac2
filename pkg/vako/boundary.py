"""
Two point boundary value problem for solutions of the degenerate
Hamiltonian: find (q0, p0) with q0 on P such that the lift satisfies

    p(a) on T_P = 0,  q(b) on Q,  p(b) on T_Q = 0

by shooting on the initial state.

"""
import collections
import concurrent.futures
import logging

import numpy as np

from vako import numerics
from vako.common import (DimensionMismatch, NoSolutionFound, MaxIterations,
                         NotOnSubmanifold, VakoError, as_vector)
from vako.flow import integrate_hamilton
from vako.geometry import Whole, tangent_projector
from vako.variation import action

LOGGER = logging.getLogger(__name__)

# Starting covectors closer than this belong to the same solution
DEDUP_TOL = 1e-6

# Share of the anchor covector norm used as the largest multi-start radius
START_SPREAD = 0.5


BvpSolution = collections.namedtuple(
    "BvpSolution", ("path", "residuals", "newton_iterations", "action"))

MultiShootResult = collections.namedtuple("MultiShootResult", ("best", "solutions"))


class BvpSpec:
    """
    Boundary submanifolds, time span, Hamiltonian, grid and the anchor
    (q0 on P, p0) used as the first shooting guess.

    """
    def __init__(self, P, Q, t0, t1, dh, steps, anchor_q=None, anchor_p=None):
        problem = dh.problem
        n = problem.n
        self.P = P
        self.Q = Q
        self.t0 = float(t0)
        self.t1 = float(t1)
        self.dh = dh
        self.steps = int(steps)
        if not self.t1 > self.t0:
            raise DimensionMismatch("BVP time span must be increasing")
        if self.steps < 1:
            raise DimensionMismatch("BVP needs at least one step")

        self.dim_P = P.dim(n)
        self.dim_Q = Q.dim(n)
        self.codim_Q = n - self.dim_Q

        if anchor_q is None:
            anchor_q = np.zeros(n) if isinstance(P, Whole) else P.project(np.zeros(n))
        self.anchor_q = as_vector(anchor_q, n, "anchor point")
        if not P.contains(self.anchor_q):
            raise NotOnSubmanifold(f"Anchor {self.anchor_q} does not lie on P")
        self.anchor_p = (np.zeros(n) if anchor_p is None
                         else as_vector(anchor_p, n, "anchor covector"))

        self.basis_P = P.tangent_basis(self.anchor_q)
        q_ref = np.zeros(n) if isinstance(Q, Whole) else Q.project(self.anchor_q)
        self.basis_Q = Q.tangent_basis(q_ref, check=False)

        unknowns = self.dim_P + n
        equations = self.dim_P + self.codim_Q + self.dim_Q
        if unknowns != equations:
            raise DimensionMismatch(f"{unknowns} unknowns against {equations} equations")

    def __repr__(self):
        return f"<BvpSpec({self.P} -> {self.Q}, [{self.t0}, {self.t1}], {self.steps} steps)>"

    @property
    def n(self):
        return self.dh.problem.n

    def split(self, x):
        """Unknown vector -> (q0, p0)."""
        s, p0 = x[:self.dim_P], x[self.dim_P:]
        q0 = self.P.project(self.anchor_q + self.basis_P @ s)
        return q0, p0

    def unknowns_for(self, p0):
        return np.concatenate([np.zeros(self.dim_P), as_vector(p0, self.n, "covector")])

    def integrate(self, q0, p0):
        return integrate_hamilton(self.dh, self.t0, self.t1, q0, p0, self.steps)

    def residual_blocks(self, path, smooth=True):
        """
        The three boundary residual vectors of an integrated path. With
        smooth the tangent bases are projections of fixed reference bases,
        otherwise orthonormal bases at the path's endpoints.

        """
        qa, pa = path.q[0], path.p[0]
        qb, pb = path.q[-1], path.p[-1]
        if smooth:
            T_P = tangent_projector(self.P, qa, self.basis_P)
            T_Q = tangent_projector(self.Q, qb, self.basis_Q)
        else:
            T_P = self.P.tangent_basis(qa)
            T_Q = self.Q.tangent_basis(qb, check=False)
        membership = self.Q.residual(qb)
        return T_P.T @ pa, membership, T_Q.T @ pb


def _block_norm(block):
    return float(np.max(np.abs(block))) if block.size else 0.0


def shoot(spec, tol=1e-10, cfg=None, start_p=None):
    """
    Damped least squares Newton on the boundary residual map, starting at
    the anchor point and at start_p (the anchor covector by default). The
    Jacobian is built by forward differences, one integration per unknown,
    and kept up to date by secant updates between rebuilds.

    Returns:
        BvpSolution whose residuals were re-evaluated on the final path.

    """
    cfg = (cfg or numerics.NewtonConfig()).replace(abs_tolerance=0.5 * tol)
    p_start = spec.anchor_p if start_p is None else start_p
    last = {}

    def residual(x):
        q0, p0 = spec.split(x)
        path = spec.integrate(q0, p0)
        last["x"], last["path"] = x.copy(), path
        return np.concatenate(spec.residual_blocks(path))

    result = numerics.newton_solve(residual, spec.unknowns_for(p_start), cfg,
                                   line_search=True, least_squares=True,
                                   forward_differences=True, broyden=True)
    q0, p0 = spec.split(result.x)
    path = last.get("path")
    if path is None or not np.array_equal(last["x"], result.x):
        path = spec.integrate(q0, p0)
    residuals = tuple(_block_norm(b) for b in spec.residual_blocks(path, smooth=False))
    if max(residuals) > tol:
        raise MaxIterations(f"Shooting residuals {residuals} exceed {tol:g} on re-evaluation",
                            best_residual=max(residuals))
    value = action(spec.dh.lagr, path.curve)
    LOGGER.info("Shoot converged in %d iterations: p0=%s, action %.12g",
                result.iterations, p0, value)
    return BvpSolution(path, residuals, result.iterations, value)


def start_covectors(spec, n_starts, seed):
    """
    The anchor covector followed by seeded samples in nested balls of
    growing radius around it.

    """
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    rng = np.random.default_rng(seed)
    spread = START_SPREAD * (1.0 + float(np.linalg.norm(spec.anchor_p)))
    starts = [spec.anchor_p.copy()]
    for i in range(1, n_starts):
        radius = spread * i / max(n_starts - 1, 1)
        direction = rng.normal(size=spec.n)
        direction /= np.linalg.norm(direction)
        starts.append(spec.anchor_p + radius * rng.uniform() ** (1.0 / spec.n) * direction)
    return starts


def _rank_key(solution):
    return (round(solution.action, 10), tuple(solution.path.p[0]), tuple(solution.path.q[0]))


def multi_start_shoot(spec, tol=1e-10, n_starts=8, seed=0, cfg=None, threads=1):
    """
    Shoot from every start covector, deduplicate the solutions by their
    initial state and rank them by action then lexicographically.

    Raises:
        NoSolutionFound when every start fails.

    """
    starts = start_covectors(spec, n_starts, seed)

    def attempt(index):
        try:
            return shoot(spec, tol, cfg, starts[index]), None
        except VakoError as err:
            LOGGER.debug("Start %d failed: %s", index, err)
            return None, getattr(err, "best_residual", None)

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(attempt, range(len(starts))))
    else:
        outcomes = [attempt(i) for i in range(len(starts))]

    solutions = []
    best_residual = np.inf
    for solution, residual in outcomes:
        if solution is None:
            if residual is not None:
                best_residual = min(best_residual, residual)
            continue
        state = np.concatenate([solution.path.q[0], solution.path.p[0]])
        if any(np.max(np.abs(state - np.concatenate([s.path.q[0], s.path.p[0]]))) < DEDUP_TOL
               for s in solutions):
            continue
        solutions.append(solution)

    failed = sum(1 for solution, _ in outcomes if solution is None)
    if failed:
        LOGGER.warning("%d of %d shooting starts failed", failed, len(starts))
    if not solutions:
        raise NoSolutionFound(f"None of {len(starts)} shooting starts converged "
                              f"(best residual {best_residual:.3e})",
                              best_residual=best_residual)

    solutions.sort(key=_rank_key)
    LOGGER.info("Multi-start shooting found %d distinct solutions", len(solutions))
    return MultiShootResult(solutions[0], solutions)
