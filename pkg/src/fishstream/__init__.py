"""fishstream - streaming earthquake early warning from a single
three-component station
"""

from .__version__ import __version__ as __version__

__author__ = "fishstream developers"
