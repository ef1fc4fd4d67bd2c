"""Near-field wideband XL-MIMO uplink with holographic metasurface antenna (HMA) beam combining."""

__version__ = "0.1.0"
