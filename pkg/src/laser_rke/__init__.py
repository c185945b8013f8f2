"""LASER: lightweight authentication for remote keyless entry, plus a
seeded radio simulator that runs attacks against it."""

from .actors import Device, Fob, ManualClock, Outcome, SystemClock, Verdict
from .analysis import LatencyStats, estimate_threshold, relay_margin, success_rate_experiment
from .crypto import HopConfig, SecretKey, derive_auth_tag, derive_channel, round_to_period
from .simnet import LatencyModel, SimConfig, Simulator

__version__ = "0.1.0"

__all__ = [
    "Device", "Fob", "ManualClock", "Outcome", "SystemClock", "Verdict",
    "LatencyStats", "estimate_threshold", "relay_margin", "success_rate_experiment",
    "HopConfig", "SecretKey", "derive_auth_tag", "derive_channel", "round_to_period",
    "LatencyModel", "SimConfig", "Simulator",
]
