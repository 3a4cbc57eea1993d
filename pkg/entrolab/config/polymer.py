from .base import BaseConfig


class PolymerConfig(BaseConfig):
    def __init__(self, config_file):
        super().__init__()

        self.config = {
            'masses': [1.0],
            'dim': 1,
            'spring': 1.0,
            'gamma': 1.0,
            'alpha_c': 0.0,
            'sweep': None,
            'temperature': 1.0,
            'window': None,
        }

        self.update(config_file)
