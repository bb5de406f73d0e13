from .structure import *
from .hamiltonian import *
from .disintegration import *
from .cdcheck import *
