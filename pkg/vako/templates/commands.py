MAIN_DESCRIPTION = """vako: constrained Lagrangians, degenerate Hamiltonians and their extremals.

Commands read a JSON problem file. Reports are written to stdout as JSON,
trajectories as CSV."""

MAIN_EPILOG = """exit codes:
  0  success
  1  unexpected internal error (see the log)
  2  problem file, trajectory or argument error
  3  numerical failure
  4  no boundary value solution found"""

HELP_CMD_USAGE = "vako {cmd} {args}"

ERROR_SCHEMA = "Problem file error: {}"
ERROR_TRAJECTORY = "Trajectory error: {}"
ERROR_COMMAND = "Error: {}"
ERROR_NUMERICAL = "Numerical failure: {}"
ERROR_NO_SOLUTION = "No solution found: {}"
ERROR_UNEXPECTED = "Hit an unexpected exception, see the log for details: {}"

ERROR_MISSING_IVP_STATE = "An initial {} is needed, from --{} or the 'ivp' block"
ERROR_MISSING_MULTIPLIER_DATA = ("The trajectory needs p columns to recover the "
                                 "multiplier of a problem with corank {}")

LIST_TITLES = ("name", "description")

LIST_DESCRIPTIONS = {
    "flat-k": "Flat distribution spanned by the first k coordinates, L = |u|^2/2 ('dim' sets n)",
    "driven-flat": "flat-2 in R^3 with the time dependent L = |u|^2/2 - sin(t) q_1",
    "heisenberg": "Heisenberg contact distribution, L = |u|^2/2",
    "heisenberg-potential": "Heisenberg distribution with potential V = z^2/2",
    "martinet": "Martinet distribution, whose line y = z = 0 is singular",
}
