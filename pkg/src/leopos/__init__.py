"""Beam-weighted LEO positioning: simulator, WLS estimator and a numpy DQN."""

__version__ = "0.1.0"
