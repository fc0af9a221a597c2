"""Two-peak solutions of a repulsive coupled Schroedinger system: reduction and verification."""
__version__ = "0.1.0"
