"""pevolab: a one-dimensional spectral laboratory for p-evolution equations."""

__version__ = "0.1.0"
