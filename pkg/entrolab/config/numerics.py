from .base import BaseConfig


class NumericsConfig(BaseConfig):
    def __init__(self, config_file):
        super().__init__()

        self.config = {
            'grid': {'lower': [-8.0], 'upper': [8.0], 'cells': [512]},
            'dt': 0.001,
            't1': 1.0,
            'n': 10000,
            'seed': 0,
            'record_every': 1,
            'courant_limit': 5.0,
            'escape_radius': None,
        }

        self.update(config_file)
