"""Random moment sequences, Hankel log-determinants and their limit theory."""

__version__ = "0.1.0"
