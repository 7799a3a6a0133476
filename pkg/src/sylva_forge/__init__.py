"""Sylva Forge: procedural forest point-cloud synthesis."""

from importlib.metadata import version, PackageNotFoundError

try:
    __version__ = version("sylva-forge")
except PackageNotFoundError:
    # Fallback for development when package is not installed
    __version__ = "0.3.0"
