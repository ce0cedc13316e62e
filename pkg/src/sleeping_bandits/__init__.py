"""Sleeping bandits: learners, environments, regret accounting, and a benchmark harness.

The library covers the sleeping multi-armed bandit setting (only a subset of
arms is available each round) and its dueling extension (only a subset of
ordered arm pairs can be compared). Arms are 0-indexed internally; every
external format (configs, CSV exports, CLI output) uses 1-indexed arm ids.
"""

__version__ = "0.1.0"

from sleeping_bandits.core import (
    ArmDistribution,
    AvailabilitySet,
    PairAvailability,
    PairWeights,
    RngStream,
    RoundTrace,
    sample_from,
)

__all__ = [
    "ArmDistribution",
    "AvailabilitySet",
    "PairAvailability",
    "PairWeights",
    "RngStream",
    "RoundTrace",
    "sample_from",
    "__version__",
]
