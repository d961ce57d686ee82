"""Magnetic blind beamforming: tri-axis coil channel, SDR current design, charging reliability."""

__version__ = "0.1.0"
