from entrolab.logger import logger


__version__ = '1.0.0'


def show_version():
    logger.info('entrolab %s', __version__)
