"""
Configuration management for OWNBM Lab.

This module provides dataclasses for generator and experiment settings that
mirror the structure of YAML experiment files and the `--gen` spec strings
accepted on the command line.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..utils.yaml_parser import YAMLParser
from .model import EDGE_MODE, WEIGHT_MODES

GENERATOR_KINDS = ["random", "geometric"]
ADVERSARIAL_PREFIX = "adversarial:"
ADVERSARIAL_NAMES = ["greedy-trap", "path-chain"]
WEIGHT_KINDS = ["uniform", "int_uniform", "constant"]
PIPELINES = ["edge", "vertex", "both"]
ORACLE_METHODS = ["exhaustive", "branch-and-bound", "subset-dp", "auto"]

DEFAULT_N = 10
DEFAULT_D = 2


@dataclass
class WeightSpec:
    """Distribution of edge or vertex weights."""

    kind: str = "uniform"
    low: float = 1.0
    high: float = 10.0

    def __post_init__(self) -> None:
        """Validate the distribution after initialization."""
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(
                f"Invalid weight kind '{self.kind}'. Must be one of: {WEIGHT_KINDS}"
            )
        if self.kind == "constant":
            self.high = self.low
        if self.low < 0:
            raise ValueError("Weights must be non-negative")
        if self.high < self.low:
            raise ValueError(f"Empty weight range [{self.low}, {self.high}]")
        if self.kind == "int_uniform" and (
            self.low != int(self.low) or self.high != int(self.high)
        ):
            raise ValueError("int_uniform bounds must be integers")

    @classmethod
    def parse(cls, text: str) -> "WeightSpec":
        """Parse `uniform:a:b`, `int_uniform:a:b` or `constant:c`."""
        parts = text.split(":")
        try:
            if parts[0] == "constant" and len(parts) == 2:
                return cls(kind="constant", low=float(parts[1]))
            if len(parts) == 3:
                return cls(kind=parts[0], low=float(parts[1]), high=float(parts[2]))
        except ValueError as e:
            raise ValueError(f"Invalid weight spec '{text}': {e}")
        raise ValueError(
            f"Invalid weight spec '{text}'. Use uniform:a:b, int_uniform:a:b or constant:c"
        )

    def to_string(self) -> str:
        if self.kind == "constant":
            return f"constant:{self.low:g}"
        return f"{self.kind}:{self.low:g}:{self.high:g}"

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(size, float(self.low))
        if self.kind == "int_uniform":
            return rng.integers(int(self.low), int(self.high) + 1, size=size).astype(float)
        return rng.uniform(self.low, self.high, size=size)


@dataclass
class GeneratorConfig:
    """Configuration for one generated instance."""

    kind: str = "random"
    n: Optional[int] = None
    d: Optional[int] = None
    mode: str = EDGE_MODE
    density: float = 0.5
    weights: WeightSpec = field(default_factory=WeightSpec)
    detour: float = 1.5
    max_rider_detour: Optional[float] = None
    eps: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate generator parameters after initialization."""
        if isinstance(self.weights, str):
            self.weights = WeightSpec.parse(self.weights)
        if self.is_adversarial:
            if self.adversarial_name not in ADVERSARIAL_NAMES:
                raise ValueError(
                    f"Unknown adversarial instance '{self.adversarial_name}'. "
                    f"Valid names: {ADVERSARIAL_NAMES}"
                )
        elif self.kind not in GENERATOR_KINDS:
            raise ValueError(
                f"Invalid kind '{self.kind}'. Must be one of: "
                f"{GENERATOR_KINDS + [ADVERSARIAL_PREFIX + '<name>']}"
            )
        else:
            if self.n is None:
                self.n = DEFAULT_N
            if self.d is None:
                self.d = DEFAULT_D

        if self.mode not in WEIGHT_MODES:
            raise ValueError(f"Invalid mode '{self.mode}'. Must be one of: {WEIGHT_MODES}")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be positive")
        if self.d is not None and self.d < 0:
            raise ValueError("d must be non-negative")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError("Density must lie in [0, 1]")
        if self.detour < 1.0:
            raise ValueError("Detour threshold must be at least 1")
        if self.max_rider_detour is not None and self.max_rider_detour < 1.0:
            raise ValueError("Rider detour limit must be at least 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    @property
    def is_adversarial(self) -> bool:
        return self.kind.startswith(ADVERSARIAL_PREFIX)

    @property
    def adversarial_name(self) -> str:
        return self.kind[len(ADVERSARIAL_PREFIX) :]

    @property
    def label(self) -> str:
        """Stable identifier used for instance ids and file names."""
        if self.is_adversarial:
            return self.adversarial_name
        return f"{self.kind}-{self.mode}-n{self.n}-d{self.d}-s{self.seed}"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GeneratorConfig":
        """
        Create a GeneratorConfig from a dictionary.

        Args:
            data: Generator settings, e.g. one entry of an experiment's `generators`

        Returns:
            GeneratorConfig created from the dictionary

        Raises:
            ValueError: If a key is unknown or a value is invalid
        """
        known = {
            "kind",
            "n",
            "d",
            "mode",
            "density",
            "p",
            "weights",
            "detour",
            "max_rider_detour",
            "eps",
            "seed",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"Unknown generator fields: {sorted(unknown)}")
        return cls(
            kind=str(data.get("kind", "random")),
            n=None if data.get("n") is None else int(data["n"]),
            d=None if data.get("d") is None else int(data["d"]),
            mode=str(data.get("mode", EDGE_MODE)),
            density=float(data.get("density", data.get("p", 0.5))),
            weights=WeightSpec.parse(str(data.get("weights", "uniform:1:10"))),
            detour=float(data.get("detour", 1.5)),
            max_rider_detour=(
                None
                if data.get("max_rider_detour") is None
                else float(data["max_rider_detour"])
            ),
            eps=float(data.get("eps", 1e-3)),
            seed=int(data.get("seed", 0)),
        )

    @classmethod
    def from_spec(cls, spec: str) -> "GeneratorConfig":
        """
        Parse a compact spec such as `random:n=8,d=2,p=0.5,weights=uniform:1:10`.

        The adversarial kinds keep their colon: `adversarial:path-chain:n=6`.
        """
        spec = spec.strip()
        if spec.startswith(ADVERSARIAL_PREFIX):
            rest = spec[len(ADVERSARIAL_PREFIX) :]
            name, _, params = rest.partition(":")
            kind = ADVERSARIAL_PREFIX + name
        else:
            kind, _, params = spec.partition(":")
        data: Dict[str, Any] = {"kind": kind}
        for item in filter(None, params.split(",")):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"Malformed generator option '{item}' in '{spec}'")
            data[key.strip()] = value.strip()
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "n": self.n,
            "d": self.d,
            "mode": self.mode,
            "density": self.density,
            "weights": self.weights.to_string(),
            "detour": self.detour,
            "max_rider_detour": self.max_rider_detour,
            "eps": self.eps,
            "seed": self.seed,
        }


@dataclass
class OracleConfig:
    """Configuration for the offline optimum."""

    method: str = "auto"
    edge_cap: int = 26

    def __post_init__(self) -> None:
        if self.method not in ORACLE_METHODS:
            raise ValueError(
                f"Invalid oracle method '{self.method}'. Must be one of: {ORACLE_METHODS}"
            )
        if self.edge_cap < 0:
            raise ValueError("Edge cap must be non-negative")


@dataclass
class ExperimentConfig:
    """Main configuration class that matches the experiment YAML structure."""

    instances: List[str] = field(default_factory=list)
    generators: List[GeneratorConfig] = field(default_factory=list)
    pipeline: str = "both"
    trials: int = 1000
    seed: int = 0
    out_dir: str = "./results"
    strict: bool = False
    save_logs: bool = False
    confidence: float = 0.95
    oracle: OracleConfig = field(default_factory=OracleConfig)

    def __post_init__(self) -> None:
        """Validate experiment settings after initialization."""
        if self.pipeline not in PIPELINES:
            raise ValueError(
                f"Invalid pipeline '{self.pipeline}'. Must be one of: {PIPELINES}"
            )
        if self.trials < 1:
            raise ValueError("Trials must be at least 1")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("Confidence must lie strictly between 0 and 1")

    def add_instance(self, path: Union[str, Path]) -> None:
        self.instances.append(str(path))

    def add_generator(self, generator: Union[str, GeneratorConfig]) -> None:
        if isinstance(generator, str):
            generator = GeneratorConfig.from_spec(generator)
        self.generators.append(generator)

    def trial_seed(self, trial: int) -> int:
        return self.seed + trial

    @classmethod
    def from_yaml_file(cls, file_path: Union[str, Path]) -> "ExperimentConfig":
        """
        Create an ExperimentConfig from a YAML file.

        Raises:
            FileNotFoundError: If the file doesn't exist
            ValueError: If the YAML is malformed or the configuration is invalid
        """
        parser = YAMLParser()
        return cls.from_dict(parser.load_file(file_path))

    @classmethod
    def from_yaml_string(cls, yaml_string: str) -> "ExperimentConfig":
        parser = YAMLParser()
        return cls.from_dict(parser.load_string(yaml_string))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """
        Create an ExperimentConfig from a dictionary.

        Raises:
            ValueError: If the configuration is invalid
        """
        oracle_data = data.get("oracle", {}) or {}
        generators = []
        for entry in data.get("generators", []) or []:
            if isinstance(entry, str):
                generators.append(GeneratorConfig.from_spec(entry))
            else:
                generators.append(GeneratorConfig.from_dict(entry))

        return cls(
            instances=[str(p) for p in data.get("instances", []) or []],
            generators=generators,
            pipeline=str(data.get("pipeline", "both")),
            trials=int(data.get("trials", 1000)),
            seed=int(data.get("seed", 0)),
            out_dir=str(data.get("out_dir", "./results")),
            strict=bool(data.get("strict", False)),
            save_logs=bool(data.get("save_logs", False)),
            confidence=float(data.get("confidence", 0.95)),
            oracle=OracleConfig(
                method=str(oracle_data.get("method", "auto")),
                edge_cap=int(oracle_data.get("edge_cap", 26)),
            ),
        )

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert the ExperimentConfig to a dictionary.

        Output paths are left out so that the same experiment written to two
        directories produces the same report.
        """
        return {
            "instances": list(self.instances),
            "generators": [g.to_dict() for g in self.generators],
            "pipeline": self.pipeline,
            "trials": self.trials,
            "seed": self.seed,
            "strict": self.strict,
            "confidence": self.confidence,
            "oracle": {"method": self.oracle.method, "edge_cap": self.oracle.edge_cap},
        }

    def validate(self) -> List[str]:
        """
        Validate the configuration and return any errors.

        Returns:
            List of validation error messages (empty if valid)
        """
        errors = []

        if not self.instances and not self.generators:
            errors.append("At least one instance file or generator is required")

        for i, path in enumerate(self.instances):
            if not Path(path).exists():
                errors.append(f"Instance {i}: File '{path}' does not exist")

        if self.pipeline == "vertex":
            for g in self.generators:
                if g.mode != "vertex":
                    errors.append(
                        f"Generator '{g.label}' produces edge-mode instances, "
                        "which the vertex pipeline cannot run"
                    )

        return errors
