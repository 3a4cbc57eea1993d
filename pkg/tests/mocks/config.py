from entrolab.config.global_config import GlobalConfig
from entrolab.config.scenario import ScenarioConfig
from entrolab.utils import load_config_schema, validate_config_format


class GlobalConfigMock(GlobalConfig):
    def __init__(self, mock_config=None):
        self.mock_config = mock_config or {}
        super().__init__(custom_path=None)

    def load(self, path, is_custom):
        return self.mock_config


class ConfigMock(ScenarioConfig):
    """ Scenario config from an in-memory dict, validated like a scenario file """

    def __init__(self,
                 mock_config=None,
                 mock_config_env=None,
                 mock_global_config=None,
                 run_kind=None,
                 scenario=None):
        self.mock_config = mock_config or {}
        self.mock_config_env = mock_config_env or {}

        super().__init__(scenario=scenario,
                         run_kind=run_kind,
                         global_config=GlobalConfigMock(mock_global_config))

    def load(self, config_path, scenario):
        if scenario:
            return super().load(config_path, scenario)

        schema = load_config_schema('scenario')
        validate_config_format(self.mock_config, schema, 'scenario', 'mock')
        return self.mock_config

    def get_env_var(self, key):
        return self.mock_config_env.get(key, None)
