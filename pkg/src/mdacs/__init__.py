"""Beam and user selection for dual-polarized planar-array FDD massive MIMO."""

__version__ = "0.1.0"
