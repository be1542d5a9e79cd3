"""Desk-scale numerical laboratory for quantization on the torus and SU(n) modular data.

Exposes the installed distribution version when the package is installed; a source
checkout falls back to a placeholder.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("quantlab")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"
