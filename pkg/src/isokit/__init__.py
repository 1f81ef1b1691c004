"""Isometric decomposition of closed triangle meshes into few congruent part classes."""

__version__ = "0.1.0"
