from .base import BaseConfig

# Large per-sample dumps are only written when listed explicitly
OPT_IN_FILES = ['ensemble.csv']


class OutputsConfig(BaseConfig):
    def __init__(self, config_file):
        super().__init__()

        self.config = {
            'directory': 'entrolab-out',
            'files': None,
            'prefix': '',
        }

        self.update(config_file)

    def wants(self, name):
        if self.config['files'] is None:
            return name not in OPT_IN_FILES
        return name in self.config['files']
