from .base import BaseConfig


class QuantumConfig(BaseConfig):
    def __init__(self, config_file):
        super().__init__()

        self.config = {
            'hamiltonian': 'sigma_z',
            'delta_h': None,
            'lindblad': [],
            'thermal_rate': None,
            'rho0': 'mixed',
            'target': 'gibbs',
            'beta': 1.0,
            'hbar': 1.0,
        }

        self.update(config_file)
