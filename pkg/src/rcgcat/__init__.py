"""Aerial image categorisation from region connected graphs and discriminative sub-structures."""

__version__ = "0.1.0"
