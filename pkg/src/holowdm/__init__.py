"""Wavenumber-division multiplexing for line-of-sight holographic links."""
__version__ = "0.1.0"
