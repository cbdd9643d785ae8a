"""Beam-space MIMO with a single-feed reconfigurable antenna: load synthesis,
far-field basis analysis, channel modelling, a frame-based 2x2 transceiver
and Monte-Carlo performance evaluation."""

from importlib import resources

from . import baseband, channel, errors, evaluation, farfield, loads, network

__version__ = "0.1.0"


def bundled_config(name: str = "scenario-nlos-iid.cfg"):
    """Path-like handle to a scenario file shipped with the package."""
    return resources.files(__name__) / "data" / name


__all__ = ["baseband", "channel", "errors", "evaluation", "farfield", "loads", "network",
           "bundled_config"]
