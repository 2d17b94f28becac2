#
# Check commands (e.g. "check-critical")
#
import collections
import logging

import numpy as np

from vako import extremals, output, problems, variation
from vako.common import DiscreteCurve, NonHorizontal, Regularity
from vako.config import ProblemFile
from vako.geometry import Point, horizontality_residual, recover_controls
from vako.legendre import invariant_suite

from . import defs
from .defs import CmdDef, CommandError

import vako.templates.commands as template

LOGGER = logging.getLogger(__name__)

# Horizontality residual allowed on an input trajectory, on top of the
# truncation error of its differenced velocities
TRAJECTORY_HORIZONTAL_TOL = 1e-4

# Check command list
_CMDS_CHECK = {
    'check-critical' : CmdDef('Check that a trajectory is a critical point of the action',
                              args=["<file:path> Problem file",
                                    "--trajectory <path> Trajectory CSV, e.g. from solve-bvp",
                                    "[--eps <float>] Variation step in [1e-6, 1e-2]"]),
    'abnormal'       : CmdDef('Look for characteristics along a trajectory',
                              args=["<file:path> Problem file",
                                    "{--trajectory <path>} Trajectory CSV",
                                    "{--line-probe} Use the straight line probe of the check block"]),
    'legendre-check' : CmdDef('Check the Legendre transform invariants of the Lagrangian',
                              args=["<file:path> Problem file",
                                    "[--samples <int>] Number of seeded fiber samples",
                                    "[--seed <int>] Sample seed"]),
    'list'           : CmdDef('List the builtin problems'),

    'legendre'       : CmdDef(None, alias="legendre-check"),
}


Probe = collections.namedtuple("Probe", ("curve", "P", "Q"))


class ClassHandler(defs.ClassHandlerInterface):
    """
    Handler for _CMDS_CHECK commands

    """
    @property
    def cmd_defs(self):
        return _CMDS_CHECK

    #
    # Curve helpers
    #
    def _read_curve(self, problem, filename):
        table = output.read_trajectory(filename, problem.n)
        curve = DiscreteCurve(table.times, table.q)
        allowed = TRAJECTORY_HORIZONTAL_TOL + 2.0 * curve.velocity_error_bound()
        residual = horizontality_residual(problem.chart, curve).max
        if residual > allowed:
            raise NonHorizontal(f"Trajectory is not horizontal: residual {residual:.3g} "
                                f"(allowed {allowed:.3g})")
        return table, curve

    def _line_probe(self, problem, check):
        start = np.zeros(problem.n) if check.probe_start is None else np.array(check.probe_start)
        direction = (np.eye(problem.n)[0] if check.probe_direction is None
                     else np.array(check.probe_direction))
        if len(start) != problem.n or len(direction) != problem.n:
            raise CommandError(f"Line probe start and direction need {problem.n} values")
        times = np.linspace(0.0, 1.0, check.probe_samples)
        curve = DiscreteCurve(times, start + np.outer(times, direction))
        u, residual = recover_controls(problem.chart, curve)
        if residual > TRAJECTORY_HORIZONTAL_TOL:
            raise NonHorizontal(f"Line probe is not horizontal: residual {residual:.3g}")
        LOGGER.info("Line probe from %s along %s", start, direction)
        return Probe(curve.with_controls(u), Point(curve.q[0]), Point(curve.q[-1]))

    #
    # Commands
    #
    def _cmd_check_critical(self, args):
        problem_file = ProblemFile(args.file)
        check = problem_file.check
        problem = self.load_problem(problem_file)
        eps = args.eps if args.eps is not None else check.eps
        if not 1e-6 <= eps <= 1e-2:
            raise CommandError("--eps must lie in [1e-6, 1e-2]")

        table, curve = self._read_curve(problem, args.trajectory)
        P, Q = self.boundary_for(problem_file, problem, curve)
        lagr = problem.lagr

        basis = variation.variation_basis(problem.chart, curve, P, Q, n_bumps=check.n_bumps)
        first = variation.first_variation(lagr, curve, basis, eps)

        m = problem.chart.corank
        if m and table.p is None:
            raise CommandError(template.ERROR_MISSING_MULTIPLIER_DATA.format(m))
        if m:
            multiplier = variation.recover_multiplier(problem.chart, table)
        else:
            multiplier = variation.Multiplier(curve.times, np.zeros((len(curve), 0)), 0.0)

        gprime = np.eye(m) if check.gprime is None else check.gprime
        Ltilde = variation.extended_lagrangian(lagr, gprime)
        Llam = variation.multiplier_lagrangian(Ltilde, multiplier.times, multiplier.values)
        el = variation.el_residual(Llam, curve)

        return {
            "problem": problem.name,
            "samples": len(curve),
            "eps": eps,
            "variation_fields": len(basis),
            "first_variation_max": first.max,
            "el_residual_max": el.max,
            "multiplier_smoothness": multiplier.smoothness,
        }

    def _cmd_abnormal(self, args):
        problem_file = ProblemFile(args.file)
        check = problem_file.check
        problem = self.load_problem(problem_file)

        if args.line_probe:
            curve, P, Q = self._line_probe(problem, check)
        else:
            _, curve = self._read_curve(problem, args.trajectory)
            P, Q = self.boundary_for(problem_file, problem, curve)

        chart = problem.chart
        result = extremals.abnormal_test(chart, curve, P, Q, tol=check.tolerance)
        annihilator = extremals.endpoint_map_oracle(chart, curve, P)
        submersion = extremals.constraint_submersion_test(chart, curve, P, Q,
                                                          tol=check.tolerance)

        if result.verdict is Regularity.Singular:
            characteristics = result.basis.at_end()
            dimension = result.basis.dim
            constraint_residual = result.basis.constraint_residual
        else:
            characteristics = np.zeros((problem.n, 0))
            dimension = 0
            constraint_residual = 0.0
        if submersion is not result.verdict:
            LOGGER.warning("Characteristic test says %s but the constraint map test says %s",
                           result.verdict.name, submersion.name)

        return {
            "problem": problem.name,
            "verdict": result.verdict,
            "dimension": dimension,
            "constraint_residual": constraint_residual,
            "oracle_dimension": annihilator.shape[1],
            "oracle_agreement_angle": extremals.agreement_angle(characteristics, annihilator),
            "submersion_verdict": submersion,
        }

    def _cmd_legendre_check(self, args):
        problem_file = ProblemFile(args.file)
        settings = problem_file.legendre
        problem = self.load_problem(problem_file)
        samples = args.samples if args.samples is not None else settings.samples
        seed = args.seed if args.seed is not None else settings.seed
        if samples < 1:
            raise CommandError("--samples must be positive")

        rng = np.random.default_rng(seed)
        points = rng.uniform(-settings.radius, settings.radius, (samples, problem.n))
        fibers = rng.uniform(-settings.radius, settings.radius, (samples, problem.k))
        bases = [(0.0, q) for q in points]
        report = invariant_suite(problem.lagr.fiber, bases, fibers, check_unique=True)

        return {
            "problem": problem.name,
            "samples": samples,
            "seed": seed,
            "involution_max_dev": report.involution,
            "mutual_inverse_max_dev": report.mutual_inverse,
            "derivative_inversion_max_dev": report.derivative_inversion,
            "envelope_max_dev": report.envelope,
        }

    def _cmd_list(self, args):
        rows = [(name, template.LIST_DESCRIPTIONS.get(name, "")) for name in problems.names()]
        return self.get_table([0, 0], ["<", "<"], template.LIST_TITLES, rows)
