import json

from entrolab.config.constants import Constants
from entrolab.logger import logger

from .base import Command


class ListCommand(Command):
    def __init__(self):
        super().__init__()
        self.cli_conf.name = 'list'
        self.cli_conf.aliases = ['default']
        self.cli_conf.help_msg = 'List the builtin scenarios'
        self.command_conf.needs_scenario = False
        self.as_json = False

    def setup_parser(self, parser):
        parser.add_argument(
            '--json',
            action='store_true',
            help='Print the scenarios as a JSON list',
            default=False,
        )

    def configure(self, args):
        self.as_json = args.json

    def run(self):
        scenarios = Constants.builtin_scenarios
        if self.as_json:
            print(json.dumps([{'name': name, 'description': description}
                              for name, description in scenarios.items()], indent=2))
            return

        width = max(len(name) for name in scenarios)
        for name, description in scenarios.items():
            logger.info('%s  %s', name.ljust(width), description)
