"""Numerical laboratory for very singular fractional diffusion in one dimension."""
