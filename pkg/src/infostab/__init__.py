"""Stability certification for the parametric fundamental equation of information."""
