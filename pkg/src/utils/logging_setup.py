import logging
import sys

LOG_FORMAT = '%(levelname)s %(name)s: %(message)s'


def configure_logging(level: str = 'WARNING') -> logging.Logger:
    """Install one stderr handler on the root logger; repeated calls only change the level"""
    root = logging.getLogger()
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        numeric = logging.WARNING

    if not any(getattr(h, '_ztbe', False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._ztbe = True
        root.addHandler(handler)
    root.setLevel(numeric)
    return root
