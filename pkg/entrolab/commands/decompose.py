import os

from entrolab.config.constants import Constants

from .base import Command, add_time_options, configure_time_options


class DecomposeCommand(Command):
    def __init__(self):
        super().__init__()
        self.cli_conf.name = Constants.DECOMPOSE
        self.cli_conf.help_msg = 'Split d/dt D into positive production and pumping rate'
        self.command_conf.run_kind = Constants.DECOMPOSE
        self.trajectory = None

    def setup_parser(self, parser):
        parser.add_argument(
            '--trajectory',
            help='Trajectory CSV written by fp-run, decomposed instead of evolving',
            default=None,
        )
        parser.add_argument(
            '--alpha',
            type=float,
            help='Constant feedback gain of the decomposed evolution',
            default=None,
        )
        add_time_options(parser)

    def configure(self, args):
        if args.trajectory:
            self.trajectory = os.path.abspath(args.trajectory)
        if args.alpha is not None:
            self.config.control.override('alpha', args.alpha)
            self.config.control.config['alpha_table'] = None
        configure_time_options(self.config, args)

    def run(self):
        self.run_scenario(trajectory_path=self.trajectory)
