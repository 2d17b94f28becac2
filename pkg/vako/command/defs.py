#
# Definitions shared between command submodules
#
import argparse
import enum
import logging
import re

import numpy as np

from vako import problems
from vako.common import DimensionMismatch, UnknownProblem
from vako.config import DEFAULT_BVP_STEPS, DEFAULT_T_SPAN, DEFAULT_TOLERANCE
from vako.geometry import Point

LOGGER = logging.getLogger(__name__)

# Exit codes
EXIT_OK         = 0
EXIT_UNEXPECTED = 1
EXIT_SCHEMA     = 2
EXIT_NUMERICAL  = 3
EXIT_NO_SOLUTION = 4


# Command classes
class CommandType(enum.Enum):
    Solve = enum.auto()
    Check = enum.auto()


class CommandError(Exception):
    def __init__(self, error_msg, exit_code=EXIT_SCHEMA):
        """
        Initialize CommandError.

        """
        self.error_msg = error_msg
        self.exit_code = exit_code

    def __str__(self):
        return self.error_msg


def parse_vector(text):
    """argparse type for comma separated floats, e.g. "1,0,0"."""
    try:
        return np.array([float(x) for x in text.split(",") if x.strip()], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma separated numbers, got '{text}'") from None


# Command definition class
class CmdDef(object):
    def __init__(self, desc, alias=None, args=None):
        self.desc = desc
        self.alias = alias
        # If this is an alias then stop now
        if alias is not None:
            self.args_def = None
            return

        if args is None:
            self.args_def = []
        else:
            self.args_def = [ArgDef(a) for a in args]

    @property
    def args_str(self):
        return " ".join(str(a) for a in self.args_def or [])

    def add_arguments(self, parser):
        """Register the arguments of this command on an argparse parser."""
        one_of = None
        for arg in self.args_def:
            if arg.has_flag(ArgDef.FLAG_ONE_OF):
                if one_of is None:
                    one_of = parser.add_mutually_exclusive_group(required=True)
                arg.add_to(one_of)
            else:
                arg.add_to(parser)


# Definition of an argument to a command
class ArgDef(object):
    # Argument flags
    FLAG_DEFAULT  = 0x0
    FLAG_OPTIONAL = 0x1
    FLAG_ONE_OF   = 0x2  # exactly one of the {...} args must be given

    _ARG_RE = (r"^([\[{]?)(?:(--[a-z][a-z0-9\-]*)(?: <([a-z]+)>)?|"
               r"<([a-z][a-z0-9_]*):([a-z]+)>)[\]}]?(?: (.*))?$")

    _TYPES = {
        "path": str,
        "int": int,
        "float": float,
        "vector": parse_vector,
    }

    def __init__(self, arg_str):
        """
        Arg string format is as follows:
           <name:type>         -- positional arg
           --flag              -- boolean switch
           --flag <type>       -- option taking a value
           [...]               -- make option optional
           {...}               -- exactly one of the {...} options is needed

        Anything after arg is the description.

        Supported arg types:
            path        -- a file name
            int         -- an integer
            float       -- a number
            vector      -- comma separated numbers

        """
        match = re.match(self._ARG_RE, arg_str)
        if match is None:
            raise Exception("Bad arg format: {}".format(arg_str))

        bracket, self.option, option_type, name, pos_type, self.desc = match.groups()
        self.flags = self.FLAG_DEFAULT
        if bracket == "[":
            self.flags |= self.FLAG_OPTIONAL
        elif bracket == "{":
            self.flags |= self.FLAG_ONE_OF

        self.name = name
        type_name = option_type if self.option else pos_type
        if type_name is not None and type_name not in self._TYPES:
            raise Exception("Unknown arg type '{}' in arg '{}'"
                            .format(type_name, arg_str))
        self.type_name = type_name

    def __str__(self):
        if self.option is None:
            return f"<{self.name}>"
        arg_str = self.option
        if self.type_name is not None:
            arg_str += f" <{self.type_name}>"
        if self.has_flag(self.FLAG_OPTIONAL):
            arg_str = f"[{arg_str}]"
        elif self.has_flag(self.FLAG_ONE_OF):
            arg_str = f"{{{arg_str}}}"
        return arg_str

    def has_flag(self, flag):
        return (self.flags & flag) == flag

    def add_to(self, parser):
        if self.option is None:
            parser.add_argument(self.name, type=self._TYPES[self.type_name],
                                help=self.desc)
        elif self.type_name is None:
            parser.add_argument(self.option, action="store_true", help=self.desc)
        else:
            parser.add_argument(self.option, type=self._TYPES[self.type_name],
                                required=self.flags == self.FLAG_DEFAULT,
                                metavar=self.type_name.upper(), help=self.desc)


class ClassHandlerInterface(object):
    """
    Class that defines the handler for a class of commands

    """
    def __init__(self):
        pass

    @property
    def cmd_defs(self):
        return None

    def handle_command(self, cmd_name, args):
        # Get the function and process it
        return self.get_cmd_func(cmd_name)(args)

    def get_cmd_func(self, cmd):
        return getattr(self, "_cmd_{}".format(cmd.replace("-", "_")))

    #
    # Shared utils
    #
    def load_problem(self, problem_file):
        """Build the problem a validated problem file describes."""
        spec = problem_file.problem
        try:
            if spec.builtin is not None:
                return problems.builtin(spec.builtin, spec.dim)
            return problems.from_inline(spec.inline.as_dict())
        except (UnknownProblem, DimensionMismatch) as e:
            raise CommandError(f"Bad problem definition: {e}") from None

    def boundary_for(self, problem_file, problem, curve=None):
        """
        (P, Q) from the bvp block, else the builtin's default boundary
        problem, else the fixed endpoints of the curve.

        """
        bvp = problem_file.bvp
        if bvp is not None:
            return bvp.P.build(problem.n), bvp.Q.build(problem.n)
        if curve is not None:
            return Point(curve.q[0]), Point(curve.q[-1])
        if problem.default_bvp:
            return problem.default_bvp["P"], problem.default_bvp["Q"]
        raise CommandError("Problem file needs a 'bvp' block for this command")

    def bvp_settings(self, problem_file, problem):
        """(t_span, steps, tolerance, anchor_q, anchor_p) for solve-bvp."""
        bvp = problem_file.bvp
        if bvp is None:
            return (DEFAULT_T_SPAN, DEFAULT_BVP_STEPS, DEFAULT_TOLERANCE, None,
                    problem.default_bvp.get("anchor_p"))
        anchor_p = bvp.anchor_p
        if anchor_p is None:
            anchor_p = problem.default_bvp.get("anchor_p")
        return bvp.t_span, bvp.steps, bvp.tolerance, bvp.anchor_q, anchor_p

    def get_table(self, widths, aligns, titles, rows, pad=0):
        # Check we have a consistent number of stuff
        if len(widths) != len(aligns) or len(widths) != len(titles):
            raise Exception("Inconsistent element counts")

        # Set widths for those that are 0
        orig_widths = widths
        rows = list(rows)
        for row in rows:
            if len(row) != len(widths):
                raise Exception("Inconsistent element counts")
            widths = [max(w, len(str(item)) + 1) if orig == 0 else w
                      for item, w, orig in zip(row, widths, orig_widths)]

        # Create format string and make sure widths can accomodate titles
        widths = [max(w, len(t)) for t, w in zip(titles, widths)]
        format_str = (" " * pad) + " ".join("{:" + a + str(w) + "}"
                                            for a, w in zip(aligns, widths))

        # Now create lines of table
        lines = [format_str.format(*titles),
                 format_str.format(*("-" * w for w in widths))]
        lines.extend(format_str.format(*row) for row in rows)
        return "\n".join(line.rstrip() for line in lines)
