"""Multimodal company embeddings from stock returns and news co-mentions."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
