"""From-scratch convolutional traffic-sign classifier for GTSRB-style data."""

__version__ = "0.1.0"
