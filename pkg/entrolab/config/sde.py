from .base import BaseConfig
from .constants import Constants


class SdeConfig(BaseConfig):
    def __init__(self, config_file):
        super().__init__()

        self.config = {
            'model': Constants.OVERDAMPED,
        }

        self.update(config_file)
