"""Curriculum-trained PPO lane following on a 2D kinematic driving simulator."""

__version__ = "0.1.0"
