"""Exact Fedosov star products on leafwise symplectic product charts."""

__version__ = "0.1.0"
