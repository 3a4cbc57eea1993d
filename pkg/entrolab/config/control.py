from .base import BaseConfig


class ControlConfig(BaseConfig):
    def __init__(self, config_file):
        super().__init__()

        self.config = {
            'alpha': 0.0,
            'alpha_table': None,
        }

        self.update(config_file)
