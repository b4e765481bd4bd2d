"""Kinematic calibration of a 6-joint arm from cable-length measurements."""

__version__ = "0.1.0"
