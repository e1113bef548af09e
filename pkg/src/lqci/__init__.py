__version__ = "0.1.0"

from . import utils
from . import core
from . import automata
from . import exact_scheme
from . import approx
from . import maxent
from . import gridworld
from . import bundle
from .errors import *
from .core import LqciInstance, CostClassTable, feasibility_check
from .exact_scheme import Improviser, build_improviser, check_instance
from .maxent import build_maxent_improviser
from .approx import build_approx_improviser
