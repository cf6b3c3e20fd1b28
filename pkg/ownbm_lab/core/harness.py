"""
Experiment engine: seeded trial batches against the offline optimum.

Every trial is validated as it runs. Rows are collected into a DataFrame and
aggregated per instance; the aggregates depend only on the rows, so they can
be recomputed from a stored trials CSV.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import pandas as pd
from scipy.stats import norm

from ..utils.instance_io import load_instance, write_run_log
from .config import ExperimentConfig
from .edge_weighted import run_edge_pipeline
from .generators import generate
from .model import (
    EDGE_MODE,
    VERTEX_MODE,
    Instance,
    InvariantError,
    ValidationReport,
    audit_deadlines,
    measure,
    validate_matching,
    validate_semi_matching,
    validate_three_matching,
)
from .oracle import OracleResult, opt, vertex_reduction
from .vertex_weighted import HALF_WEIGHT_FACTOR, ORIGIN, run_vertex_pipeline

logger = logging.getLogger(__name__)

TRIAL_COLUMNS = [
    "instance_id",
    "trial",
    "seed",
    "branch",
    "semi_weight",
    "half_weight",
    "final_weight",
    "opt",
    "ratio",
]
UNDEFINED = "undefined"
EDGE_TARGET = 0.25
SLACK = 1e-9
MAX_LISTED_VIOLATIONS = 100


@dataclass
class RunUnit:
    """One instance paired with one pipeline."""

    instance_id: str
    pipeline: str
    instance: Instance
    oracle: OracleResult

    def metadata(self) -> Dict[str, Any]:
        return {
            "instance_id": self.instance_id,
            "pipeline": self.pipeline,
            "mode": self.instance.weight_mode,
            "n": self.instance.n,
            "d": self.instance.d,
            "edges": self.instance.edge_count,
            "opt_method": self.oracle.method,
        }


@dataclass
class TrialOutcome:
    row: Dict[str, Any]
    violations: List[str]
    deadline_violations: int
    result: Any


def _ratio(value: float, optimum: float) -> Union[float, str]:
    return value / optimum if optimum > 0 else UNDEFINED


def _unique(name: str, taken: Dict[str, int]) -> str:
    taken[name] = taken.get(name, 0) + 1
    return name if taken[name] == 1 else f"{name}-{taken[name]}"


def load_sources(cfg: ExperimentConfig) -> List[Tuple[str, Instance]]:
    """Instances named by the config: files first, then generators."""
    taken: Dict[str, int] = {}
    sources: List[Tuple[str, Instance]] = []
    for path in cfg.instances:
        sources.append((_unique(Path(path).stem, taken), load_instance(path)))
    for gen in cfg.generators:
        sources.append((_unique(gen.label, taken), generate(gen)))
    return sources


def plan_units(cfg: ExperimentConfig, sources: List[Tuple[str, Instance]]) -> List[RunUnit]:
    """
    Pair each instance with the pipelines that apply to it.

    The edge pipeline runs on every instance (vertex-mode ones through the
    w_j + w_i reduction); the vertex pipeline only on vertex-mode instances.
    """
    units: List[RunUnit] = []
    for name, inst in sources:
        pipelines = []
        if cfg.pipeline in ("edge", "both"):
            pipelines.append(EDGE_MODE)
        if cfg.pipeline in ("vertex", "both") and inst.weight_mode == VERTEX_MODE:
            pipelines.append(VERTEX_MODE)
        if not pipelines:
            logger.warning("Skipping %s: the vertex pipeline needs vertex weights", name)
            continue
        oracle = opt(inst, method=cfg.oracle.method, edge_cap=cfg.oracle.edge_cap)
        if oracle.weight <= 0:
            logger.warning("OPT of %s is 0; its ratios are reported as undefined", name)
        for pipeline in pipelines:
            instance_id = name if len(pipelines) == 1 else f"{name}/{pipeline}"
            units.append(RunUnit(instance_id, pipeline, inst, oracle))
    return units


def run_trial(unit: RunUnit, trial: int, seed: int) -> TrialOutcome:
    """Run one seeded trial and check every structure it produced."""
    checks: List[ValidationReport] = []
    optimum = unit.oracle.weight
    if unit.pipeline == EDGE_MODE:
        inst = unit.instance
        if inst.weight_mode == VERTEX_MODE:
            inst = vertex_reduction(inst)
        result: Any = run_edge_pipeline(inst, seed=seed)
        semi = measure(inst, result.semi_matching)
        final = measure(inst, result.matching)
        half: Optional[float] = None
        branch: Optional[str] = None
        checks += [
            validate_semi_matching(inst, result.semi_matching),
            validate_matching(inst, result.matching),
        ]
        extra = []
        if semi < 0.5 * optimum - SLACK:
            extra.append(f"semi-matching weight {semi:.6g} below half of OPT {optimum:.6g}")
        if not math.isclose(semi, result.total_valuation, rel_tol=1e-9, abs_tol=SLACK):
            extra.append(
                f"semi-matching weight {semi:.6g} differs from allocation value "
                f"{result.total_valuation:.6g}"
            )
    else:
        inst = unit.instance
        result = run_vertex_pipeline(inst, seed=seed)
        semi = measure(inst, result.semi_matching)
        final = measure(inst, result.three_matching)
        half = result.half_weight
        branch = result.branch
        checks += [
            validate_semi_matching(inst, result.semi_matching),
            validate_three_matching(inst, result.three_matching),
        ]
        extra = []
        if final < half - SLACK:
            extra.append(f"3-matching weight {final:.6g} below half-weight {half:.6g}")

    deadlines = audit_deadlines(inst, result.events)
    violations = [v for report in checks for v in report.violations] + extra
    violations += list(deadlines.violations)
    violations = [f"{unit.instance_id} trial {trial}: {v}" for v in violations]
    for message in violations:
        logger.warning(message)

    row = {
        "instance_id": unit.instance_id,
        "trial": trial,
        "seed": seed,
        "branch": branch,
        "semi_weight": semi,
        "half_weight": half,
        "final_weight": final,
        "opt": optimum,
        "ratio": _ratio(final, optimum),
    }
    return TrialOutcome(row, violations, len(deadlines.violations), result)


def _se(series: pd.Series) -> float:
    return float(series.sem(ddof=1)) if len(series) > 1 else 0.0


def aggregate_trials(trials: pd.DataFrame, confidence: float = 0.95) -> pd.DataFrame:
    """
    Per-instance aggregates computed from trial rows alone.

    Vertex runs are recognized by their half-weight column.
    """
    z = float(norm.ppf((1 + confidence) / 2))
    ordered = trials.sort_values(["instance_id", "trial"], kind="mergesort")
    records = []
    for instance_id, group in ordered.groupby("instance_id", sort=True):
        optimum = float(group["opt"].iloc[0])
        final = group["final_weight"].astype(float)
        semi = group["semi_weight"].astype(float)
        halves = pd.to_numeric(group["half_weight"], errors="coerce")
        is_vertex = bool(halves.notna().any())
        target = HALF_WEIGHT_FACTOR if is_vertex else EDGE_TARGET

        mean, se = float(final.mean()), _se(final)
        record: Dict[str, Any] = {
            "instance_id": instance_id,
            "trials": int(len(group)),
            "opt": optimum,
            "mean_final": mean,
            "se_final": se,
            "ci_low": mean - z * se,
            "ci_high": mean + z * se,
            "ratio": _ratio(mean, optimum),
            "min_semi_ratio": _ratio(float(semi.min()), optimum),
            "target_ratio": target,
            "ratio_bound_ok": bool(mean >= target * optimum - 3 * se - SLACK),
        }
        if is_vertex:
            mean_half, se_half = float(halves.mean()), _se(halves)
            dominance = [f / h for f, h in zip(final, halves) if h > 0]
            branches = group["branch"].astype(str)
            record.update(
                {
                    "mean_half": mean_half,
                    "se_half": se_half,
                    "half_ratio": _ratio(mean_half, HALF_WEIGHT_FACTOR * optimum),
                    "half_bound_ok": bool(
                        mean_half >= HALF_WEIGHT_FACTOR * optimum - 3 * se_half - SLACK
                    ),
                    "min_dominance": min(dominance) if dominance else UNDEFINED,
                    "origin_share": float((branches == ORIGIN).mean()),
                }
            )
        records.append(record)
    return pd.DataFrame.from_records(records)


def _plain(value: Any) -> Any:
    if isinstance(value, float) and math.isnan(value):
        return None
    if hasattr(value, "item"):
        return _plain(value.item())
    return value


def _records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    return [
        {k: _plain(v) for k, v in row.items() if not (isinstance(v, float) and math.isnan(v))}
        for row in frame.to_dict(orient="records")
    ]


@dataclass
class ExperimentReport:
    """Trial rows, per-instance aggregates and every violation found."""

    config: Dict[str, Any]
    units: List[Dict[str, Any]]
    trials: pd.DataFrame
    summary: pd.DataFrame
    violations: List[str] = field(default_factory=list)
    deadline_violations: int = 0
    run_logs: List[Tuple[str, str, int, Any]] = field(default_factory=list)
    generated_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    @property
    def violation_count(self) -> int:
        return len(self.violations)

    def instance_records(self) -> List[Dict[str, Any]]:
        by_id = {r["instance_id"]: r for r in _records(self.summary)}
        return [{**unit, **by_id.get(unit["instance_id"], {})} for unit in self.units]

    def to_dict(self, include_timestamp: bool = True) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "config": self.config,
            "instances": self.instance_records(),
            "violation_count": self.violation_count,
            "deadline_violation_count": self.deadline_violations,
            "violations": self.violations[:MAX_LISTED_VIOLATIONS],
        }
        if include_timestamp:
            data["generated_at"] = self.generated_at
        return data

    def to_json(self, include_timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(include_timestamp), indent=2, sort_keys=True) + "\n"

    def trials_csv(self) -> str:
        return self.trials.to_csv(index=False, lineterminator="\n")

    def write(self, out_dir: Union[str, Path]) -> Dict[str, Path]:
        """Write report.json, trials.csv and any saved run logs."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"report": out / "report.json", "trials": out / "trials.csv"}
        paths["report"].write_text(self.to_json(), encoding="utf-8")
        paths["trials"].write_text(self.trials_csv(), encoding="utf-8")
        for instance_id, pipeline, trial, result in self.run_logs:
            name = f"{instance_id.replace('/', '.')}-trial{trial}.json"
            write_run_log(out / "logs" / name, instance_id, pipeline, result)
        logger.info("Wrote %s and %s", paths["report"], paths["trials"])
        return paths


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """
    Run every trial of every instance in the config.

    Trial k uses seed cfg.seed + k. In strict mode any violation raises
    InvariantError carrying the finished report.
    """
    errors = cfg.validate()
    if errors:
        raise ValueError("Invalid experiment configuration: " + "; ".join(errors))

    units = plan_units(cfg, load_sources(cfg))
    rows: List[Dict[str, Any]] = []
    violations: List[str] = []
    deadline_count = 0
    run_logs: List[Tuple[str, str, int, Any]] = []

    for unit in sorted(units, key=lambda u: u.instance_id):
        logger.info(
            "%s: %s pipeline, n=%d d=%d |E|=%d OPT=%.6g, %d trials",
            unit.instance_id,
            unit.pipeline,
            unit.instance.n,
            unit.instance.d,
            unit.instance.edge_count,
            unit.oracle.weight,
            cfg.trials,
        )
        for trial in range(cfg.trials):
            outcome = run_trial(unit, trial, cfg.trial_seed(trial))
            rows.append(outcome.row)
            violations.extend(outcome.violations)
            deadline_count += outcome.deadline_violations
            if cfg.save_logs:
                run_logs.append((unit.instance_id, unit.pipeline, trial, outcome.result))

    trials = pd.DataFrame(rows, columns=TRIAL_COLUMNS)
    trials = trials.sort_values(["instance_id", "trial"], kind="mergesort").reset_index(drop=True)
    report = ExperimentReport(
        config=cfg.to_dict(),
        units=[u.metadata() for u in sorted(units, key=lambda u: u.instance_id)],
        trials=trials,
        summary=aggregate_trials(trials, cfg.confidence) if rows else pd.DataFrame(),
        violations=violations,
        deadline_violations=deadline_count,
        run_logs=run_logs,
    )
    if cfg.strict and violations:
        raise InvariantError(
            f"{len(violations)} invariant violations; first: {violations[0]}", report=report
        )
    return report


def load_summary(path: Union[str, Path], confidence: float = 0.95) -> pd.DataFrame:
    """Aggregate table from a stored report JSON or a trials CSV."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Report file not found: {path}")
    if path.suffix.lower() == ".csv":
        trials = pd.read_csv(path, keep_default_na=True)
        missing = [c for c in TRIAL_COLUMNS if c not in trials.columns]
        if missing:
            raise ValueError(f"{path} is missing trial columns: {missing}")
        return aggregate_trials(trials, confidence)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: line {e.lineno}: {e.msg}")
    return pd.DataFrame.from_records(data.get("instances", []))


SUMMARY_COLUMNS = [
    "instance_id",
    "trials",
    "opt",
    "mean_final",
    "se_final",
    "ratio",
    "min_semi_ratio",
    "mean_half",
    "min_dominance",
    "ratio_bound_ok",
]


def format_summary(summary: pd.DataFrame) -> str:
    """Plain-text aggregate table."""
    if summary.empty:
        return "(no trials)"
    columns = [c for c in SUMMARY_COLUMNS if c in summary.columns]
    return summary[columns].to_string(index=False, float_format=lambda x: f"{x:.4f}")
