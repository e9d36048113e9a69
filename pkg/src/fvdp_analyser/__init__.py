"""
fvdp-analyser: slow-fast analysis of the forced van der Pol system.
"""
from __future__ import annotations

__all__ = ("__version__",)
__version__ = "0.1.0"
