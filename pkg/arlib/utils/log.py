import logging

__all__ = ["log", "set_verbosity", "TRACE"]

TRACE = 5
logging.addLevelName(TRACE, "TRACE")


def _trace(self, msg, *args, **kwargs):
    if self.isEnabledFor(TRACE):
        self._log(TRACE, msg, args, **kwargs)


logging.Logger.trace = _trace

log = logging.getLogger("arlib")
log.addHandler(logging.NullHandler())

_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG}
_FORMAT = "[%(levelname)8s] %(name)s: %(message)s"


def set_verbosity(verbosity):
    """0 -> WARNING, 1 -> INFO, 2 -> DEBUG, 3 or more -> TRACE."""
    verbosity = int(verbosity)
    if verbosity < 0:
        raise ValueError(f"verbosity must be >= 0, got {verbosity}")
    level = _LEVELS.get(verbosity, TRACE)
    if not any(getattr(h, "_arlib", False) for h in log.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_FORMAT))
        handler._arlib = True
        log.addHandler(handler)
    log.setLevel(level)
    return level
