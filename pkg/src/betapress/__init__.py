"""BetaPress - beta regression prediction measures."""

__version__ = "0.3.0"
