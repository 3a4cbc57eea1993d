import hashlib
import os

from jsonschema import validate, ValidationError
import yaml

from entrolab.logger import logger
from entrolab.exceptions import EntroLabException, FileNotFoundException, ValidationException
from entrolab.config.constants import Constants


def env(name):
    value = None
    if name in os.environ and os.environ[name]:
        value = os.environ[name]

    return value


def makedirs(path):
    os.makedirs(path, 0o777, True)
    return path


def format_float(value):
    return format(float(value), f'.{Constants.float_digits}g')


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            digest.update(chunk)

    return digest.hexdigest()


def load_yaml(path, name):
    if not os.path.exists(path):
        raise FileNotFoundException(f'{name} file "{path}" does not exist.')

    with open(path, 'r', encoding='UTF-8') as f:
        try:
            config = yaml.safe_load(f)
        except yaml.YAMLError as err:
            raise ValidationException(
                f'Failed reading {name} from "{path}". It is not valid yaml file.'
            ) from err

    return config if config else {}


def load_config_schema(name):
    file_name = f'{name}.schema'
    schema_path = os.path.join(os.path.dirname(__file__), 'config', file_name)
    with open(schema_path, 'r', encoding='UTF-8') as f:
        try:
            return yaml.safe_load(f)
        except yaml.YAMLError as err:
            raise EntroLabException(
                f'Failed reading "{file_name}", it is not valid yaml file'
            ) from err


def validate_config_format(config, schema, name, path):
    try:
        validate(instance=config, schema=schema)
    except ValidationError as e:
        logger.error('The %s file "%s" contains invalid fields!', name, path)
        error_message = e.message
        # Lets add the key to the invalid value
        if e.path:
            if len(e.path) > 1 and isinstance(e.path[-1], int):
                error_message = f'{error_message} (in "{e.path[-2]}")'
            else:
                error_message = f'{error_message} (in "{e.path[-1]}")'
        raise ValidationException(error_message) from e
