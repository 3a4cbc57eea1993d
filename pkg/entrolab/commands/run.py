import os

from entrolab.config.constants import Constants
from entrolab.exceptions import ValidationException
from entrolab.command_utils import get_commands

from .base import Command


class RunCommand(Command):
    def __init__(self):
        super().__init__()
        self.cli_conf.name = 'run'
        self.cli_conf.help_msg = 'Run a builtin scenario or a scenario file, dispatching on its run key'

    def setup_parser(self, parser):
        parser.add_argument(
            'name',
            nargs='?',
            help='Builtin scenario name or path to a scenario file',
            default=None,
        )

    def load_configs(self, args):
        if args.name:
            if args.config or args.scenario:
                raise ValidationException('Give the scenario either by name or with '
                                          '--config/--scenario, not both')
            if args.name in Constants.builtin_scenarios:
                args.scenario = args.name
            elif os.path.isfile(args.name):
                args.config = args.name
            else:
                raise ValidationException(
                    f'"{args.name}" is neither a builtin scenario nor a scenario file')

        if not args.config and not args.scenario:
            raise ValidationException('run needs a scenario, see "entrolab list"')

        super().load_configs(args)

    def run(self):
        commands = {c.cli_conf.name: c for c in get_commands()}
        command = commands[self.config.run]
        command.init_from_command(self)
        command.run()
        self.manifest = command.manifest
