"""Deformation quantization on the two-sphere and adiabatic perturbation
theory for a coupled two-spin model."""

__version__ = "0.1.0"
