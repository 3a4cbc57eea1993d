#!/usr/bin/env python3
# PYTHON_ARGCOMPLETE_OK

try:
    import argcomplete
    HAS_ARGCOMPLETE = True
except ImportError:
    HAS_ARGCOMPLETE = False

import sys
import logging

from entrolab.logger import logger as _logger, log_file, console_handler
from entrolab.exceptions import EntroLabException, ValidationException
from entrolab.cli import Cli
from entrolab.version import __version__
from entrolab.command_utils import get_commands


class EntroLab():
    def __init__(self):
        self.cli = Cli()
        self.verbose = False
        self.commands = get_commands()

    def create_parser(self):
        for cmd in self.commands:
            self.cli.add_cmd_parser(cmd)

    def run(self, argv=None):
        if HAS_ARGCOMPLETE:
            argcomplete.autocomplete(self.cli.parser)
        else:
            _logger.debug('argcomplete is not installed')

        args = self.cli.parse_args(list(sys.argv[1:] if argv is None else argv))

        self.verbose = 'verbose' in args and args.verbose
        if self.verbose:
            console_handler.setLevel(logging.DEBUG)
        _logger.debug('entrolab v%s', __version__)

        if "func" not in args:
            default = ['default']
            if self.verbose:
                default += ['--verbose']

            args = self.cli.parse_args(default)

        args.func(args)


def main(argv=None):
    entrolab = EntroLab()

    try:
        entrolab.create_parser()
        entrolab.run(argv)
    except ValidationException as e:
        _logger.error(str(e))
        sys.exit(e.exit_code)
    except EntroLabException as e:
        _logger.error(str(e))
        suggested_dt = getattr(e, 'suggested_dt', None)
        if suggested_dt:
            _logger.info('Retry with dt <= %g', suggested_dt)
        sys.exit(e.exit_code)
    except KeyboardInterrupt:
        _logger.info('')  # Print an empty space at then end so the cli prompt is nicer
        sys.exit(0)
    except Exception as e:  # pylint: disable=broad-except
        _logger.debug('Encountered an unknown error', exc_info=e)
        if not entrolab.verbose:
            _logger.critical('Encountered an unknown error: %s', e)

        _logger.critical('If you believe this is a bug, please file a report with the log '
                        'file located at %s', log_file)
        sys.exit(3)


if __name__ == '__main__':
    main()
