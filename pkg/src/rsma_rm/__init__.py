"""Rate-matching precoder design for RSMA multibeam satellite downlinks."""

__version__ = "0.1.0"
