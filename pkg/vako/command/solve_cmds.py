#
# Solve commands (e.g. "solve-ivp")
#
import logging

import numpy as np

from vako import output
from vako.boundary import BvpSpec, multi_start_shoot
from vako.config import DEFAULT_IVP_STEPS, DEFAULT_T_SPAN, ProblemFile, thread_count
from vako.flow import flow_report, integrate_hamilton

from . import defs
from .defs import CmdDef, CommandError

import vako.templates.commands as template

LOGGER = logging.getLogger(__name__)

# Solve command list
_CMDS_SOLVE = {
    'solve-ivp' : CmdDef('Integrate the Hamilton equations from an initial point and covector',
                         args=["<file:path> Problem file",
                               "[--q0 <vector>] Initial point, overrides the ivp block",
                               "[--p0 <vector>] Initial covector, overrides the ivp block",
                               "[--steps <int>] RK4 steps, overrides the ivp block",
                               "--out <path> CSV file for the trajectory"]),
    'solve-bvp' : CmdDef('Solve the boundary value problem by multi-start shooting',
                         args=["<file:path> Problem file",
                               "[--starts <int>] Shooting starts, overrides the bvp block",
                               "[--seed <int>] Seed for the start covectors",
                               "[--out <path>] Prefix for one CSV trajectory per solution"]),

    'ivp'       : CmdDef(None, alias="solve-ivp"),
    'bvp'       : CmdDef(None, alias="solve-bvp"),
}


def _path_summary(path):
    return {
        "q0": path.q[0],
        "p0": path.p[0],
        "q1": path.q[-1],
        "p1": path.p[-1],
    }


class ClassHandler(defs.ClassHandlerInterface):
    """
    Handler for _CMDS_SOLVE commands

    """
    @property
    def cmd_defs(self):
        return _CMDS_SOLVE

    def _cmd_solve_ivp(self, args):
        problem_file = ProblemFile(args.file)
        ivp = problem_file.ivp
        problem = self.load_problem(problem_file)

        q0 = args.q0
        if q0 is None:
            q0 = ivp.q0 if ivp is not None and ivp.q0 is not None else np.zeros(problem.n)
        p0 = args.p0
        if p0 is None:
            if ivp is None or ivp.p0 is None:
                raise CommandError(template.ERROR_MISSING_IVP_STATE.format("covector", "p0"))
            p0 = ivp.p0
        for name, value in (("q0", q0), ("p0", p0)):
            if len(value) != problem.n:
                raise CommandError(f"Expected {problem.n} values for {name}, got {len(value)}")

        steps = args.steps if args.steps is not None else (
            ivp.steps if ivp is not None else DEFAULT_IVP_STEPS)
        if steps < 1:
            raise CommandError("--steps must be positive")
        t0, t1 = ivp.t_span if ivp is not None else DEFAULT_T_SPAN

        path = integrate_hamilton(problem.dh, t0, t1, q0, p0, steps)
        report = flow_report(path, problem.chart, problem.autonomous)
        LOGGER.info("Integrated %s: %d steps in %.3fs", problem.name, report.steps,
                    report.wall_time)

        output.write_trajectory(args.out, path)
        result = {
            "problem": problem.name,
            "t_span": [t0, t1],
            "steps": report.steps,
            "energy_drift": report.energy_drift,
            "horizontality_max": report.horizontality_max,
            "final_q": path.q[-1],
            "final_p": path.p[-1],
            "trajectory": args.out,
        }
        if report.energy_drift is None:
            del result["energy_drift"]
        return result

    def _cmd_solve_bvp(self, args):
        problem_file = ProblemFile(args.file)
        problem = self.load_problem(problem_file)
        P, Q = self.boundary_for(problem_file, problem)
        (t0, t1), steps, tolerance, anchor_q, anchor_p = self.bvp_settings(problem_file,
                                                                           problem)
        bvp = problem_file.bvp
        n_starts = args.starts if args.starts is not None else (
            bvp.starts if bvp is not None else 8)
        seed = args.seed if args.seed is not None else (bvp.seed if bvp is not None else 0)
        if n_starts < 1:
            raise CommandError("--starts must be positive")

        spec = BvpSpec(P, Q, t0, t1, problem.dh, steps, anchor_q=anchor_q, anchor_p=anchor_p)
        result = multi_start_shoot(spec, tol=tolerance, n_starts=n_starts, seed=seed,
                                   threads=thread_count())

        solutions = []
        for i, solution in enumerate(result.solutions):
            start, membership, end = solution.residuals
            entry = {"rank": i + 1}
            entry.update(_path_summary(solution.path))
            entry.update({
                "action": solution.action,
                "residuals": {
                    "start_transversality": start,
                    "end_membership": membership,
                    "end_transversality": end,
                },
                "newton_iterations": solution.newton_iterations,
            })
            if args.out is not None:
                filename = f"{args.out}-{i + 1}.csv"
                output.write_trajectory(filename, solution.path)
                entry["trajectory"] = filename
            solutions.append(entry)

        return {
            "problem": problem.name,
            "starts": n_starts,
            "seed": seed,
            "tolerance": tolerance,
            "solutions": solutions,
        }
