"""Bit-level precision tuning for straight-line and looping numeric programs."""

__version__ = "0.1.0"
