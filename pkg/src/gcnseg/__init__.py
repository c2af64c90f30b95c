"""Graph-convolution segmentation toolkit with exact spectral verification."""

__version__ = "0.1.0"
