#  Copyright (c) 2024 pufentropy developers

from .basetypes import *
from .errors import *
from .puf import *
from .group import *
from .sampler import *
from .estimators import *
from .oracle import *
from .store import *
from .report import *
from .tables import *
