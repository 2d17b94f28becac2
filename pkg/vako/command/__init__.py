import logging
import sys

from vako import output
from vako.common import NoSolutionFound, VakoError
from vako.config import ConfigError
from vako.output import TrajectoryFormatError

from . import check_cmds
from . import defs
from . import solve_cmds

from .defs import CommandError, CommandType

import vako.templates.commands as template

LOGGER = logging.getLogger(__name__)


class Handler(object):
    """
    Command handler class: registers every command on an argparse parser
    and runs the parsed command, mapping failures to exit codes.

    """
    def __init__(self, stdout=None, stderr=None):
        self._stdout = stdout or sys.stdout
        self._stderr = stderr or sys.stderr

        # Command handlers
        self._handlers = {
            CommandType.Solve: solve_cmds.ClassHandler(),
            CommandType.Check: check_cmds.ClassHandler(),
        }

    def _find(self, cmd):
        for handler_class in self._handlers.values():
            cmd_def = handler_class.cmd_defs.get(cmd)
            if cmd_def is not None:
                return handler_class, cmd_def
        return None, None

    def add_parsers(self, subparsers):
        """Add one sub-parser per command, aliases included."""
        for handler_class in self._handlers.values():
            for name, cmd_def in handler_class.cmd_defs.items():
                if cmd_def.alias is not None:
                    continue
                aliases = [n for n, c in handler_class.cmd_defs.items() if c.alias == name]
                parser = subparsers.add_parser(
                    name, aliases=aliases, help=cmd_def.desc, description=cmd_def.desc,
                    usage=template.HELP_CMD_USAGE.format(cmd=name, args=cmd_def.args_str))
                cmd_def.add_arguments(parser)

    def handle_command(self, args):
        """
        Run the command named by args.cmd.

        Returns:
            The process exit code.

        """
        try:
            self._handle_command_worker(args)

        except ConfigError as e:
            self._error(template.ERROR_SCHEMA.format(e))
            return defs.EXIT_SCHEMA

        except TrajectoryFormatError as e:
            self._error(template.ERROR_TRAJECTORY.format(e))
            return defs.EXIT_SCHEMA

        except CommandError as e:
            self._error(template.ERROR_COMMAND.format(e))
            return e.exit_code

        except NoSolutionFound as e:
            self._error(template.ERROR_NO_SOLUTION.format(e))
            return defs.EXIT_NO_SOLUTION

        except VakoError as e:
            self._error(template.ERROR_NUMERICAL.format(e))
            return defs.EXIT_NUMERICAL

        except Exception as e:
            # Anything else is a bug, so record the traceback
            LOGGER.exception("Hit exception processing command %s", args.cmd)
            self._error(template.ERROR_UNEXPECTED.format(e))
            return defs.EXIT_UNEXPECTED

        return defs.EXIT_OK

    def _handle_command_worker(self, args):
        cmd = args.cmd
        handler_class, cmd_def = self._find(cmd)

        # If this is an alias, then update
        if cmd_def is not None and cmd_def.alias is not None:
            cmd = cmd_def.alias
            handler_class, cmd_def = self._find(cmd)

        if cmd_def is None:
            raise CommandError(f"Unknown command '{cmd}'")

        LOGGER.info("Running command %s", cmd)
        result = handler_class.handle_command(cmd, args)

        # Reports are JSON, listings plain text
        if isinstance(result, str):
            self._stdout.write(result + "\n")
        else:
            self._stdout.write(output.to_json(result))

    def _error(self, text):
        LOGGER.debug(text)
        self._stderr.write(text + "\n")
