from entrolab.config.constants import Constants

from .base import Command, add_time_options, configure_time_options


class FpRunCommand(Command):
    def __init__(self):
        super().__init__()
        self.cli_conf.name = Constants.FP_RUN
        self.cli_conf.help_msg = 'Evolve the Fokker-Planck equation and track D(rho_t || Gibbs)'
        self.command_conf.run_kind = Constants.FP_RUN

    def setup_parser(self, parser):
        add_time_options(parser)

    def configure(self, args):
        configure_time_options(self.config, args)

    def run(self):
        self.run_scenario()
