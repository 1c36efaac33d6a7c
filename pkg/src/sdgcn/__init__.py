"""Spectral graph convolution on signed directed graphs via a magnetic Laplacian."""

__version__ = "0.1.0"
