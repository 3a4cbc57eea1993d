import os

from entrolab.exceptions import FileNotFoundException

from entrolab.utils import (
    load_config_schema,
    load_yaml,
    validate_config_format,
)

from .constants import Constants


class GlobalConfig():
    """ User-wide defaults from ~/.entrolab/config.yaml, layered under every scenario """

    def __init__(self, custom_path=None):
        path = custom_path if custom_path else Constants.entrolab_config_path
        self.path = path
        config = self.load(path, custom_path)
        schema = load_config_schema('global')
        validate_config_format(config, schema, 'EntroLab config', path)

        self.numerics = config.get('numerics', {})
        self.outputs = config.get('outputs', {})

    def load(self, path, is_custom):
        if not os.path.exists(path):
            if is_custom:
                raise FileNotFoundException(
                    f'Specified EntroLab config file "{path}" does not exist.'
                )
            return {}

        return load_yaml(path, 'EntroLab config')

    def sections(self):
        return {
            'numerics': self.numerics,
            'outputs': self.outputs,
        }
