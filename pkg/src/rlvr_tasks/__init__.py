"""Procedural task generation, verification, and reward scoring for
counting, graph, and spatial reasoning datasets."""

__version__ = "0.1.0"
