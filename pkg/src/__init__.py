"""Collapse Lab - Numerical laboratory for collapsing hyper-Kähler fibrations"""

__version__ = "0.1.0"
