"""Desk-scale checks of balance-selected algebras and boundary quantum records."""

__version__ = "0.1.0"
