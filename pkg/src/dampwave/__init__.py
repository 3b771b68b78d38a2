"""Simulation and stability checks for the 1D wave equation with localized
interior damping and dynamic (Wentzell) boundary conditions."""

__version__ = "0.1.0"
