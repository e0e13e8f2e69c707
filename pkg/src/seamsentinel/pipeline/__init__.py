"""Simulation, featurization, training and reporting orchestration."""

from seamsentinel.pipeline.config import ConfigError, PipelineConfig, load_config

__all__ = ["ConfigError", "PipelineConfig", "load_config"]
