import argparse
import sys

from entrolab.version import show_version
from entrolab.exceptions import EntroLabException
from entrolab.config.constants import Constants


class VersionAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        show_version()
        sys.exit(0)


class Cli():
    def __init__(self):
        self.commands = []

        self.parser = argparse.ArgumentParser(
            description='entrolab: relative entropy production experiments')
        self.subparsers = self.parser.add_subparsers(title='commands', dest='sub_command')

        self.parser.add_argument('--version', '-v', nargs=0, action=VersionAction)

    def add_cmd_parser(self, command):
        config = command.cli_conf

        if not config.name:
            raise EntroLabException(
                f"Command class {type(command).__name__} has no command name.")

        parser = self.subparsers.add_parser(
            config.name,
            help=config.help_msg,
            aliases=config.aliases
        )

        self.add_common_options(parser)
        command.setup_complete_parser(parser)

        parser.set_defaults(func=command.start)

        self.commands.append(config.name)
        self.commands.extend(config.aliases)

    def add_common_options(self, parser):
        scenarios = ', '.join(Constants.builtin_scenarios)

        parser.add_argument(
            '--config',
            '-c',
            help='Scenario file (YAML) to run',
            default=None
        )
        parser.add_argument(
            '--scenario',
            '-s',
            help=f'Builtin scenario to run, one of [{scenarios}]',
            default=None
        )
        parser.add_argument(
            '--entrolab-config',
            help='Use specified user config file instead of '
                 f'"{Constants.entrolab_config_path}"',
            default=None
        )
        parser.add_argument(
            '--out',
            '-o',
            help='Output directory (overrides outputs.directory and ENTROLAB_OUT)',
            default=None
        )
        parser.add_argument(
            '--seed',
            type=int,
            help='Seed of every random stream (overrides numerics.seed and ENTROLAB_SEED)',
            default=None
        )

        self.add_verbose_option(parser)

    def add_verbose_option(self, parser):
        parser.add_argument(
            '--verbose',
            action='store_true',
            help='Print debug output',
            default=False,
        )

    def parse_args(self, argv):
        """Parse ``argv``, running ``list`` when options come without a command."""
        top_level = ('-h', '--help', '-v', '--version')
        has_command = any(arg in self.commands for arg in argv)

        if argv and not has_command and argv[0] not in top_level:
            argv = ['default'] + list(argv)

        return self.parser.parse_args(argv)
