"""Metamorphic differential testing for shader compilers, plus vendor blob forensics."""

__version__ = "0.1.0"
