from .expr import *
from .ops import *
from .errors import *
from arlib import (
    geometry as geometry,
    utils as utils
)

__version__ = "0.1.0"

__all__ = ["expr", "ops", "errors", "geometry", "utils"]
