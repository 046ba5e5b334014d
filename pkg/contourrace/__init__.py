__version__ = "0.1.0"

from .config import *
from .dynamics import *
from .track import *
from .mpcc import *
from .opponent import *
from .experiments import *
from .race import *
