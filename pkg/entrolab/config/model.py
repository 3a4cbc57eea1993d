from .base import BaseConfig


class ModelConfig(BaseConfig):
    def __init__(self, config_file):
        super().__init__()

        self.config = {
            'hamiltonian': 'quadratic',
            'coefficients': [1.0],
            'well': {'a': 1.0, 'b': 2.0},
            'kT': 1.0,
            'sigma2': 2.0,
        }

        self.update(config_file)


class InitialConfig(BaseConfig):
    def __init__(self, config_file):
        super().__init__()

        self.config = {
            'mean': [1.0],
            'covariance': [[2.0]],
        }

        self.update(config_file)
