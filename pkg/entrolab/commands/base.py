from entrolab.config.command import CommandConf, CommandCliConf
from entrolab.config.global_config import GlobalConfig
from entrolab.config.scenario import ScenarioConfig
from entrolab.logger import logger
from entrolab.runner import run_scenario


class Command():
    def __init__(self):
        self.config = None
        self.global_config = None
        self.manifest = None
        self.cli_conf = CommandCliConf()
        self.command_conf = CommandConf()

    def init_from_command(self, command):
        self.config = command.config
        self.global_config = command.global_config
        self.configure_nested()

    def parse_common_options(self, args):
        self.load_configs(args)

        self.config.outputs.override('directory', args.out)
        self.config.numerics.override('seed', args.seed)

    def load_configs(self, args):
        self.global_config = GlobalConfig(args.entrolab_config)
        self.config = ScenarioConfig(args.config, args.scenario, self.command_conf.run_kind,
                                     self.global_config)

    def check_errors(self):
        self.config.validate()

    def start(self, args):
        if self.command_conf.needs_scenario:
            self.parse_common_options(args)

        self.configure(args)

        if self.command_conf.needs_scenario:
            self.check_errors()
        self.run()

    def run_scenario(self, **kwargs):
        self.manifest = run_scenario(self.config, **kwargs)
        logger.info('%s finished, manifest at %s', self.cli_conf.name,
                    self.config.outputs.directory)
        return self.manifest

    def setup_complete_parser(self, parser):
        self.setup_parser(parser)

    def setup_parser(self, parser):
        """ Set up command specific command line interface """
        # Implemented in subclasses

    def configure(self, args):
        """ Configure from command line interface with arguments """
        # Implemented in subclasses

    def configure_nested(self):
        """ Configure as nested command, e.g. when dispatched by run """
        # Implemented in subclasses

    def run(self):
        """ Run command """
        raise NotImplementedError('run is not yet implemented')


def add_time_options(parser, horizon='--t1'):
    parser.add_argument(
        '--dt',
        type=float,
        help='Time step',
        default=None,
    )
    parser.add_argument(
        horizon,
        dest='t1',
        type=float,
        help='Final time of the run',
        default=None,
    )


def configure_time_options(config, args):
    config.numerics.override('dt', args.dt)
    config.numerics.override('t1', args.t1)
