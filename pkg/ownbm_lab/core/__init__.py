"""
Core functionality for OWNBM Lab.
"""

from .config import ExperimentConfig, GeneratorConfig, OracleConfig, WeightSpec
from .edge_weighted import run_edge_pipeline
from .generators import gen_adversarial, gen_geometric_rides, gen_random, generate
from .harness import ExperimentReport, aggregate_trials, run_experiment
from .model import (
    Edge,
    Instance,
    Matching,
    SemiMatching,
    ThreeMatching,
    ValidationReport,
    measure,
    stream,
    validate_instance,
)
from .oracle import opt, opt_edge_weighted, opt_vertex_weighted
from .vertex_weighted import run_vertex_pipeline

__all__ = [
    "Edge",
    "ExperimentConfig",
    "ExperimentReport",
    "GeneratorConfig",
    "Instance",
    "Matching",
    "OracleConfig",
    "SemiMatching",
    "ThreeMatching",
    "ValidationReport",
    "WeightSpec",
    "aggregate_trials",
    "gen_adversarial",
    "gen_geometric_rides",
    "gen_random",
    "generate",
    "measure",
    "opt",
    "opt_edge_weighted",
    "opt_vertex_weighted",
    "run_edge_pipeline",
    "run_experiment",
    "run_vertex_pipeline",
    "stream",
    "validate_instance",
]
