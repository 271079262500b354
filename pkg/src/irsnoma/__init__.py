"""Joint active/passive beamforming for IRS-aided downlink NOMA."""

__version__ = "0.1.0"
