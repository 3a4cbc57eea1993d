import os

from entrolab.config.constants import Constants

from .base import Command, add_time_options, configure_time_options


class ControlRunCommand(Command):
    def __init__(self):
        super().__init__()
        self.cli_conf.name = Constants.CONTROL_RUN
        self.cli_conf.help_msg = 'Run the log-ratio feedback (modulated) evolution'
        self.command_conf.run_kind = Constants.CONTROL_RUN

    def setup_parser(self, parser):
        gain = parser.add_mutually_exclusive_group()
        gain.add_argument(
            '--alpha',
            type=float,
            help='Constant feedback gain',
            default=None,
        )
        gain.add_argument(
            '--alpha-table',
            help='CSV file with columns t,alpha, interpolated piecewise linearly',
            default=None,
        )
        add_time_options(parser, horizon='--horizon')
        parser.add_argument(
            '--prefix',
            help='Prefix for every output file name',
            default=None,
        )

    def configure(self, args):
        if args.alpha is not None:
            self.config.control.override('alpha', args.alpha)
            self.config.control.config['alpha_table'] = None
        if args.alpha_table is not None:
            self.config.control.override('alpha_table', os.path.abspath(args.alpha_table))

        configure_time_options(self.config, args)
        self.config.outputs.override('prefix', args.prefix)

    def run(self):
        self.run_scenario()
