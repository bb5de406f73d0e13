from .creation import *
from .math import *
from .calculus import *
from .parsing import *
from .manipulation import *
from .codegen import *
