"""Cooperative time-reversal data aggregation: channel synthesis, link
statistics, grid routing, the three-area protocol and lifetime analysis."""

from .kernels import BACKEND
from .phy_channel import ChannelParams, FadingChannel, sample_channel

__all__ = ["BACKEND", "ChannelParams", "FadingChannel", "sample_channel"]
__version__ = "0.1.0"
