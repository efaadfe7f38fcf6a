"""Certify X-tanglement of quantum states and subspaces."""

from ._xtangle import *  # noqa: F401,F403
from ._xtangle import __version__  # noqa: F401
