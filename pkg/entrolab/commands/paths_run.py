from entrolab.config.constants import Constants

from .base import Command, add_time_options, configure_time_options


class PathsRunCommand(Command):
    def __init__(self):
        super().__init__()
        self.cli_conf.name = Constants.PATHS_RUN
        self.cli_conf.help_msg = 'Estimate forward, backward and current drifts from an ensemble'
        self.command_conf.run_kind = Constants.PATHS_RUN

    def setup_parser(self, parser):
        add_time_options(parser)

    def configure(self, args):
        configure_time_options(self.config, args)

    def run(self):
        self.run_scenario()
