"""
OWNBM Lab - online windowed non-bipartite matching experiments.
"""

__version__ = "0.1.0"
__author__ = "anishnya"

from .cli import main
from .core import (
    ExperimentConfig,
    GeneratorConfig,
    Instance,
    generate,
    opt,
    run_edge_pipeline,
    run_experiment,
    run_vertex_pipeline,
)
from .utils import YAMLParser, load_instance, save_instance

__all__ = [
    "main",
    "ExperimentConfig",
    "GeneratorConfig",
    "Instance",
    "generate",
    "opt",
    "run_edge_pipeline",
    "run_experiment",
    "run_vertex_pipeline",
    "YAMLParser",
    "load_instance",
    "save_instance",
]
