"""Foliated geodesic and horocycle flow experiments on hyperbolic surfaces, suspensions and Sol^3."""

__version__ = "0.1.0"
