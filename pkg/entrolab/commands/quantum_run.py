from entrolab.config.constants import Constants

from .base import Command, add_time_options, configure_time_options


class QuantumRunCommand(Command):
    def __init__(self):
        super().__init__()
        self.cli_conf.name = Constants.QUANTUM_RUN
        self.cli_conf.help_msg = 'Closed or Lindblad evolution of a density operator'
        self.command_conf.run_kind = Constants.QUANTUM_RUN

    def setup_parser(self, parser):
        operator_help = ('an operator file (text or .csv) or a builtin name '
                         'such as sigma_x')
        parser.add_argument(
            '--hamiltonian',
            help=f'Hamiltonian, {operator_help}',
            default=None,
        )
        parser.add_argument(
            '--delta-h',
            help=f'Perturbation of the Hamiltonian, {operator_help}',
            default=None,
        )
        parser.add_argument(
            '--lindblad',
            nargs='+',
            help=f'Jump operators, each {operator_help}',
            default=None,
        )
        parser.add_argument(
            '--rho0',
            help=f'Initial state, {operator_help}',
            default=None,
        )
        add_time_options(parser)

    def configure(self, args):
        quantum = self.config.quantum
        quantum.override('hamiltonian', args.hamiltonian)
        quantum.override('delta_h', args.delta_h)
        quantum.override('lindblad', args.lindblad)
        quantum.override('rho0', args.rho0)
        configure_time_options(self.config, args)

    def run(self):
        self.run_scenario()
