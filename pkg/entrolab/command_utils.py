import importlib
import pkgutil

import entrolab.commands
from entrolab.commands.base import Command


def _command_classes(module):
    for value in vars(module).values():
        if isinstance(value, type) and issubclass(value, Command) \
                and value is not Command and value.__module__ == module.__name__:
            yield value


def get_commands():
    """One instance of every Command subclass found in entrolab.commands, by module name."""
    commands = []
    package = entrolab.commands
    for info in sorted(pkgutil.iter_modules(package.__path__), key=lambda info: info.name):
        if info.name == 'base':
            continue
        module = importlib.import_module(f'{package.__name__}.{info.name}')
        commands.extend(cls() for cls in _command_classes(module))
    return commands
