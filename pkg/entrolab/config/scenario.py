import os

import numpy as np

from entrolab.control import GainSchedule
from entrolab.exceptions import FileNotFoundException, ValidationException
from entrolab.model_core import GaussianDensity, Grid, HamiltonianSpec
from entrolab.quantum import (
    DensityOperator,
    HamiltonianOperator,
    LindbladSpec,
    gibbs_state,
    resolve_operator,
    thermal_jump_operators,
)
from entrolab.sde_lab import PolymerSpec
from entrolab.utils import (
    env,
    load_config_schema,
    load_yaml,
    validate_config_format,
)
from ..logger import logger

from .constants import Constants
from .control import ControlConfig
from .global_config import GlobalConfig
from .model import InitialConfig, ModelConfig
from .numerics import NumericsConfig
from .outputs import OutputsConfig
from .paths import PathsConfig
from .polymer import PolymerConfig
from .quantum import QuantumConfig
from .sde import SdeConfig


class ScenarioConfig():
    """A validated scenario: defaults, user config, scenario file, environment and flags.

    Sections are plain dict-backed configs. The ``build_*`` methods turn them into
    the objects the numerical modules consume.
    """

    ENV_MAP = {
        'ENTROLAB_OUT': ('outputs', 'directory', str),
        'ENTROLAB_SEED': ('numerics', 'seed', int),
    }

    section_classes = {
        'model': ModelConfig,
        'initial': InitialConfig,
        'control': ControlConfig,
        'numerics': NumericsConfig,
        'sde': SdeConfig,
        'polymer': PolymerConfig,
        'quantum': QuantumConfig,
        'paths': PathsConfig,
        'outputs': OutputsConfig,
    }

    def __init__(self, config_path=None, scenario=None, run_kind=None, global_config=None):
        self.path = None
        self.base_dir = os.getcwd()
        config = self.load(config_path, scenario)
        self.name = config.get('scenario', scenario or 'custom')
        self.run = run_kind or config.get('run')
        if self.run is None:
            raise ValidationException(
                f'Scenario "{self.name}" does not name a run kind '
                f'(one of {", ".join(Constants.run_kinds)})')
        if self.run not in Constants.run_kinds:
            raise ValidationException(f'Unknown run kind "{self.run}"')

        if global_config is None:
            global_config = GlobalConfig()
        user_sections = global_config.sections()

        for name, section_class in self.section_classes.items():
            section = section_class(user_sections.get(name, {}))
            section.update(config.get(name, {}))
            setattr(self, name, section)

        self.apply_env()

    def load(self, config_path, scenario):
        if config_path and scenario:
            raise ValidationException('Use either --config or --scenario, not both')

        if scenario:
            if scenario not in Constants.builtin_scenarios:
                raise ValidationException(
                    f'Unknown scenario "{scenario}", run "entrolab list" to see the builtins')
            config_path = os.path.join(Constants.scenario_dir, f'{scenario}.yaml')

        if not config_path:
            return {}

        if not os.path.isfile(config_path):
            raise FileNotFoundException(f'Scenario file "{config_path}" does not exist.')

        self.path = config_path
        self.base_dir = os.path.dirname(os.path.abspath(config_path))
        config = load_yaml(config_path, 'scenario')
        schema = load_config_schema('scenario')
        validate_config_format(config, schema, 'scenario', config_path)
        logger.debug('Loaded scenario from "%s"', config_path)
        return config

    def get_env_var(self, key):
        return env(key)

    def apply_env(self):
        for var, (section, key, convert) in self.ENV_MAP.items():
            value = self.get_env_var(var)
            if value is None:
                continue
            try:
                value = convert(value)
            except ValueError as err:
                raise ValidationException(f'Environment variable {var}="{value}" is invalid') \
                    from err
            logger.debug('%s overrides %s.%s', var, section, key)
            getattr(self, section).override(key, value)

    def resolve_path(self, path):
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    def validate(self):
        """Re-check every numeric constraint after all layers have been applied."""
        if self.sde.model not in Constants.sde_models:
            raise ValidationException(f'Unknown SDE model "{self.sde.model}"')

        model = self.model
        if not model.kT > 0:
            raise ValidationException(f'model.kT must be positive, got {model.kT}')
        if not model.sigma2 >= 0:
            raise ValidationException(f'model.sigma2 must be nonnegative, got {model.sigma2}')

        grid = self.build_grid('numerics')
        self.build_grid('paths')

        numerics = self.numerics
        for key in ('dt', 't1', 'courant_limit'):
            if not numerics.config[key] > 0:
                raise ValidationException(f'numerics.{key} must be positive, '
                                          f'got {numerics.config[key]}')
        if numerics.dt > numerics.t1:
            raise ValidationException(
                f'numerics.dt={numerics.dt} is larger than the horizon t1={numerics.t1}')
        if int(numerics.n) < 1:
            raise ValidationException(f'numerics.n must be at least 1, got {numerics.n}')
        if int(numerics.seed) < 0 or int(numerics.seed) >= 2 ** 64:
            raise ValidationException(f'numerics.seed must be an unsigned 64-bit integer, '
                                      f'got {numerics.seed}')
        if int(numerics.record_every) < 1:
            raise ValidationException('numerics.record_every must be at least 1')

        overdamped_sde = self.run == Constants.SDE_RUN and self.sde.model == Constants.OVERDAMPED
        if overdamped_sde or self.run in (Constants.FP_RUN, Constants.CONTROL_RUN,
                                          Constants.DECOMPOSE, Constants.PATHS_RUN):
            ham = self.build_hamiltonian()
            self.build_initial()
            if ham.ndim != grid.ndim:
                raise ValidationException(
                    f'numerics.grid has {grid.ndim} dimensions, the Hamiltonian {ham.ndim}')
            self.build_gain_schedule().validate(model.sigma2, 0.0, numerics.t1, numerics.dt)

        if self.polymer.gamma < 0 or self.polymer.alpha_c < 0:
            raise ValidationException('polymer.gamma and polymer.alpha_c must be nonnegative')
        for gain in self.polymer.sweep or []:
            if gain < 0:
                raise ValidationException(f'polymer.sweep holds a negative gain {gain}')

        if self.paths.stride < 1 or self.paths.min_count < 1:
            raise ValidationException('paths.stride and paths.min_count must be at least 1')

        return self

    def build_grid(self, section='numerics'):
        grid = getattr(self, section).grid
        missing = {'lower', 'upper', 'cells'} - set(grid)
        if missing:
            raise ValidationException(f'{section}.grid misses {", ".join(sorted(missing))}')
        return Grid(grid['lower'], grid['upper'], grid['cells'])

    def build_hamiltonian(self):
        model = self.model
        if model.hamiltonian == 'double-well':
            return HamiltonianSpec.double_well(model.well.get('a', 1.0), model.well.get('b', 2.0),
                                               model.kT, model.sigma2)

        coefficients = np.asarray(model.coefficients, dtype=float)
        q_matrix = np.diag(coefficients) if coefficients.ndim == 1 else coefficients
        return HamiltonianSpec.quadratic(q_matrix, model.kT, model.sigma2)

    def build_initial(self):
        return GaussianDensity(self.initial.mean, self.initial.covariance)

    def build_gain_schedule(self):
        table = self.control.alpha_table
        if isinstance(table, str):
            return GainSchedule.from_csv(self.resolve_path(table))
        if table:
            times, values = zip(*table)
            return GainSchedule.from_table(times, values)
        return GainSchedule.constant(self.control.alpha)

    def build_polymer(self, alpha_c=None):
        polymer = self.polymer
        return PolymerSpec.harmonic(polymer.masses, polymer.spring, polymer.gamma,
                                    polymer.alpha_c if alpha_c is None else alpha_c,
                                    polymer.temperature, polymer.dim)

    def build_operator(self, value):
        if isinstance(value, (list, tuple)) and value and not isinstance(value[0], (list, tuple)):
            value = [self.resolve_path(v) for v in value]
        elif isinstance(value, str):
            path = self.resolve_path(value)
            value = path if os.path.exists(path) else value
        return resolve_operator(value)

    def build_quantum(self):
        """Hamiltonian, optional perturbation, Lindblad spec, initial state and target."""
        quantum = self.quantum
        ham = HamiltonianOperator(self.build_operator(quantum.hamiltonian), quantum.hbar)
        delta_h = None
        if quantum.delta_h is not None:
            delta_h = HamiltonianOperator(self.build_operator(quantum.delta_h), quantum.hbar)

        jumps = [self.build_operator(op) for op in quantum.lindblad]
        if quantum.thermal_rate:
            jumps.extend(thermal_jump_operators(ham, quantum.beta, quantum.thermal_rate))
        spec = LindbladSpec(ham, tuple(jumps))

        rho0 = DensityOperator(self.build_operator(quantum.rho0))
        if quantum.target == 'gibbs':
            target = gibbs_state(ham, quantum.beta)
        else:
            target = DensityOperator(self.build_operator(quantum.target))

        if rho0.dim != ham.dim or target.dim != ham.dim:
            raise ValidationException('quantum operators have mismatching dimensions')
        return ham, delta_h, spec, rho0, target
