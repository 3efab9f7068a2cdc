"""Python bindings for the glpmfd multi-frame radar detection library."""

from ._glpmfd import *  # noqa: F401,F403
from ._glpmfd import __version__  # noqa: F401
