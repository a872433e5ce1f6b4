"""Zero-delay SCER replay attack simulation and partial-correlation spoofing detectors."""

__version__ = "0.1.0"
