"""Entanglement-assisted capacity regions of quantum multiple-access channels."""
__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402,F401
