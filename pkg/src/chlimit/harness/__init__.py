"""Experiment configuration, run bookkeeping and the command line."""

from .config import ExperimentConfig, load_config
from .manifest import RunManifest

__all__ = ["ExperimentConfig", "load_config", "RunManifest"]
