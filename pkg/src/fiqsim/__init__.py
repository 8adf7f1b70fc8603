"""Indeterministic classical mechanics with finite-information quantities."""
from .fiq import (
    FiqState,
    InfoReport,
    binary_entropy,
    info_content,
    propensity,
    sample_bit,
    states_identical,
    to_interval,
    total_information,
)
from .streams import seed_stream

__all__ = [
    "FiqState",
    "InfoReport",
    "binary_entropy",
    "info_content",
    "propensity",
    "sample_bit",
    "seed_stream",
    "states_identical",
    "to_interval",
    "total_information",
]

__version__ = "0.1.0"
