"""Decentralised provenance management for distributed ML workflows."""

__version__ = "0.1.0"
