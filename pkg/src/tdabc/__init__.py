"""Topological data analysis based classification (TDABC)."""
__version__ = "0.1.0"
