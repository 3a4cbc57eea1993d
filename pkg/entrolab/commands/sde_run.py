from entrolab.config.constants import Constants

from .base import Command, add_time_options, configure_time_options


class SdeRunCommand(Command):
    def __init__(self):
        super().__init__()
        self.cli_conf.name = Constants.SDE_RUN
        self.cli_conf.help_msg = 'Simulate an ensemble of the overdamped or polymer model'
        self.command_conf.run_kind = Constants.SDE_RUN

    def setup_parser(self, parser):
        parser.add_argument(
            '--model',
            choices=Constants.sde_models,
            help='Overdamped diffusion or underdamped polymer blocks',
            default=None,
        )
        parser.add_argument(
            '--n',
            type=int,
            help='Number of trajectories',
            default=None,
        )
        add_time_options(parser)
        parser.add_argument(
            '--alpha-c',
            type=float,
            help='Velocity feedback gain of the polymer model',
            default=None,
        )
        parser.add_argument(
            '--gamma',
            type=float,
            help='Friction of the polymer model',
            default=None,
        )

    def configure(self, args):
        self.config.sde.override('model', args.model)
        self.config.numerics.override('n', args.n)
        configure_time_options(self.config, args)
        if args.alpha_c is not None:
            self.config.polymer.override('alpha_c', args.alpha_c)
            self.config.polymer.config['sweep'] = None
        self.config.polymer.override('gamma', args.gamma)

    def run(self):
        self.run_scenario()
