"""Interpolation between r.i. spaces with L-infinity extremes, made executable."""
__version__ = "0.1.0"
