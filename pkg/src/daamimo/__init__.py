"""Downlink max-min power control for multi-cell massive MIMO with distributed antenna arrays."""
from .config import ConfigError, ExperimentSpec, NetworkConfig, load_spec
from .covariance import CovarianceSet, build_covariance_set, one_ring_covariance
from .estimation import EstimatorStats, PilotGram, estimator_stats, pilot_gram
from .geometry import Layout, make_layout
from .power_control import MaxMinResult, equal_nu, maxmin
from .sinr import PowerCoefficients, SinrReport, evaluate_sinr, sinr, throughput

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ExperimentSpec", "NetworkConfig", "load_spec",
    "CovarianceSet", "build_covariance_set", "one_ring_covariance",
    "EstimatorStats", "PilotGram", "estimator_stats", "pilot_gram",
    "Layout", "make_layout", "MaxMinResult", "equal_nu", "maxmin",
    "PowerCoefficients", "SinrReport", "evaluate_sinr", "sinr", "throughput",
]
