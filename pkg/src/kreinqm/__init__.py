"""Krein-space (J-Hermitian) quantum mechanics on finite 1-D grids."""

from .krein import *  # noqa: F401,F403
from .hamiltonians import *  # noqa: F401,F403
from .spectrum import *  # noqa: F401,F403
from .evolution import *  # noqa: F401,F403

__version__ = "0.1.0"
