from .log import *
from .io import *
from .parallel import *
