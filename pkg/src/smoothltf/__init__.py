"""Smoothed agnostic learning of halfspaces over {-1,+1}^n."""

__version__ = "0.1.0"
