"""Desk-scale vision-based line following: segmentation, regression networks,
simulation, and teleoperation tooling."""

__version__ = "0.1.0"
