from ..logger import logger


class BaseConfig():
    def __init__(self):
        self.config = {}

    def update(self, config_file):
        if not config_file:
            return

        for key, value in config_file.items():
            if key not in self.config:
                logger.debug('Ignored unknown config key "%s"', key)
            elif isinstance(self.config[key], dict) and isinstance(value, dict):
                self.config[key] = {**self.config[key], **value}
            else:
                self.config[key] = value

    def override(self, key, value):
        """ Set a key from the command line or environment, ignoring unset values """
        if value is not None:
            self.config[key] = value

    def __getattr__(self, name):
        try:
            return self.__dict__['config'][name]
        except KeyError as err:
            raise AttributeError(name) from err
