from .config import ConfigMock, GlobalConfigMock  # noqa=F401


def empty_fn(*args, **kwargs):
    pass
