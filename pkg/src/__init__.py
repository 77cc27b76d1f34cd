"""Umbra stealth-address anonymity toolkit"""

__version__ = "0.1.0"
