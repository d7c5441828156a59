"""Pseudo-spectral Navier-Stokes on a periodic box, with every run checked
against rigorous bounds on its energy spectrum.

The public API is re-exported here; the on-disk workflows live in
``kolmobounds.pipeline`` and the command line in ``kolmobounds.cli``.
"""
from .lattice import *  # noqa: F401,F403
from .initial import *  # noqa: F401,F403
from .forcing import *  # noqa: F401,F403
from .dynamics import *  # noqa: F401,F403
from .oracle import *  # noqa: F401,F403
from .spectra import *  # noqa: F401,F403
from .bounds import *  # noqa: F401,F403
from .filters import *  # noqa: F401,F403
from .behavior import *  # noqa: F401,F403
from .io import *  # noqa: F401,F403
from .analysis import *  # noqa: F401,F403
from . import pipeline  # noqa: F401

__version__ = "0.1.0"
