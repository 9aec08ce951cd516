"""Reverse engineering CAN signal definitions from raw bus logs."""

__version__ = "0.1.0"
