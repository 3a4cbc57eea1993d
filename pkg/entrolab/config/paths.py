from .base import BaseConfig


class PathsConfig(BaseConfig):
    def __init__(self, config_file):
        super().__init__()

        self.config = {
            'grid': {'lower': [-4.0], 'upper': [4.0], 'cells': [80]},
            'min_count': 30,
            'bandwidth': 'auto',
            'stride': 1,
        }

        self.update(config_file)
