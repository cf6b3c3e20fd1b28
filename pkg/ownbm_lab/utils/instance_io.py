"""
Reading and writing instance files and run logs.

Instances are stored as JSON with one edge per line, so that diagnostics can
point at the offending line:

    {
      "n": 4,
      "d": 2,
      "mode": "edge",
      "edges": [
        {"from": 2, "to": 1, "weight": 5.0},
        {"from": 3, "to": 1, "weight": 2.0}
      ]
    }

Vertex-mode files add a "vertex_weights" list and leave weights off the edges.
"""

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..core.model import (
    EDGE_MODE,
    VERTEX_MODE,
    Edge,
    Instance,
    Matching,
    PickedEdge,
    RunEvent,
    SemiMatching,
    ThreeMatchEvent,
    ThreeMatching,
    validate_instance,
)

ROOT_FIELDS = {"n", "d", "mode", "vertex_weights", "edges"}
EDGE_FIELDS = {"from", "to", "weight"}

_EDGE_LABEL = re.compile(r"edge \((-?\d+),(-?\d+)\)")
_FROM_KEY = re.compile(r'"from"\s*:')


class InstanceFormatError(ValueError):
    """An instance file that cannot be turned into a valid instance."""

    def __init__(self, message: str, line: Optional[int] = None, problems: Optional[List[str]] = None):
        super().__init__(message)
        self.line = line
        self.problems = problems or [message]


def _number(value: Any) -> Any:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    return value


def _dump(value: Any) -> str:
    return json.dumps(value, separators=(", ", ": "))


def serialize(inst: Instance) -> str:
    """Canonical text of an instance; parse(serialize(x)) == x."""
    lines = ["{", f'  "n": {inst.n},', f'  "d": {inst.d},', f'  "mode": {_dump(inst.weight_mode)},']
    if inst.weight_mode == VERTEX_MODE:
        weights = [float(w) for w in inst.vertex_weights or ()]
        lines.append(f'  "vertex_weights": {_dump(weights)},')
    if not inst.edges:
        lines.append('  "edges": []')
    else:
        lines.append('  "edges": [')
        rows = []
        for e in inst.edges:
            row: Dict[str, Any] = {"from": e.origin, "to": e.terminal}
            if inst.weight_mode == EDGE_MODE:
                row["weight"] = float(e.weight or 0.0)
            rows.append("    " + _dump(row))
        lines.append(",\n".join(rows))
        lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _edge_lines(text: str) -> List[int]:
    return [text.count("\n", 0, m.start()) + 1 for m in _FROM_KEY.finditer(text)]


def _locate(
    problem: str, keys: List[Tuple[Any, Any]], lines: List[int]
) -> Optional[int]:
    match = _EDGE_LABEL.search(problem)
    if match is None:
        return None
    key = (int(match.group(1)), int(match.group(2)))
    hits = [k for k, seen in enumerate(keys) if seen == key]
    if not hits:
        return None
    # A duplicate is reported on its second occurrence.
    index = hits[1] if "duplicate" in problem and len(hits) > 1 else hits[0]
    return lines[index] if index < len(lines) else None


def _fail(problems: List[Tuple[Optional[int], str]]) -> InstanceFormatError:
    rendered = [f"line {line}: {msg}" if line else msg for line, msg in problems]
    first = next((line for line, _ in problems if line), None)
    return InstanceFormatError("; ".join(rendered), line=first, problems=rendered)


def parse(data: Union[str, bytes]) -> Instance:
    """
    Parse instance text into a validated Instance.

    Raises:
        InstanceFormatError: With the line of the first problem when known
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"line {e.lineno}: {e.msg}", line=e.lineno)

    if not isinstance(raw, dict):
        raise InstanceFormatError("instance must be a JSON object")
    problems: List[Tuple[Optional[int], str]] = []
    for name in sorted(set(raw) - ROOT_FIELDS):
        problems.append((None, f"unknown field '{name}'"))
    for name in ("n", "d", "mode", "edges"):
        if name not in raw:
            problems.append((None, f"missing field '{name}'"))
    if problems:
        raise _fail(problems)

    raw_edges = raw["edges"]
    if not isinstance(raw_edges, list):
        raise InstanceFormatError("'edges' must be a list")
    lines = _edge_lines(text)
    keys: List[Tuple[Any, Any]] = []
    edges: List[Edge] = []
    for k, item in enumerate(raw_edges):
        line = lines[k] if k < len(lines) else None
        if not isinstance(item, dict) or not {"from", "to"} <= set(item):
            problems.append((line, f"edge #{k + 1} needs 'from' and 'to'"))
            continue
        extra = sorted(set(item) - EDGE_FIELDS)
        if extra:
            problems.append((line, f"edge #{k + 1}: unknown field '{extra[0]}'"))
        if raw["mode"] == EDGE_MODE and "weight" not in item:
            problems.append((line, f"edge ({item['from']},{item['to']}): missing weight"))
            continue
        keys.append((item["from"], item["to"]))
        edges.append(Edge(item["from"], item["to"], _number(item.get("weight"))))
    if problems:
        raise _fail(problems)

    vertex_weights = raw.get("vertex_weights")
    if isinstance(vertex_weights, list):
        vertex_weights = tuple(_number(w) for w in vertex_weights)
    elif vertex_weights is not None:
        raise InstanceFormatError("'vertex_weights' must be a list")

    inst = Instance(
        n=raw["n"],
        d=raw["d"],
        weight_mode=raw["mode"],
        edges=tuple(edges),
        vertex_weights=vertex_weights,
    )
    report = validate_instance(inst)
    if not report.ok:
        raise _fail([(_locate(p, keys, lines), p) for p in report.violations])
    return inst


def load_instance(path: Union[str, Path]) -> Instance:
    """
    Read and validate an instance file.

    Args:
        path: Path to a JSON instance file

    Returns:
        The parsed Instance

    Raises:
        FileNotFoundError: If the file doesn't exist
        InstanceFormatError: If the file is malformed or the instance invalid
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Instance file not found: {path}")
    try:
        return parse(path.read_bytes())
    except InstanceFormatError as e:
        raise InstanceFormatError(f"{path}: {e}", line=e.line, problems=e.problems)


def save_instance(inst: Instance, path: Union[str, Path]) -> Path:
    """
    Write an instance in canonical form, creating parent directories.

    Args:
        inst: Instance to write
        path: Destination file

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize(inst), encoding="utf-8")
    return path


@dataclass(frozen=True)
class RunLog:
    """A pipeline run as stored on disk."""

    instance_id: str
    pipeline: str
    seed: Optional[int]
    branch: Optional[str]
    semi_matching: SemiMatching
    matching: Optional[Matching]
    three_matching: Optional[ThreeMatching]
    events: Tuple[RunEvent, ...]


def _picks(entries: Any) -> List[List[int]]:
    return [[e.origin, e.terminal, e.pick_time] for e in entries]


def run_log_to_dict(instance_id: str, pipeline: str, result: Any) -> Dict[str, Any]:
    """JSON-ready form of an EdgeRunResult or VertexRunResult."""
    data: Dict[str, Any] = {
        "instance_id": instance_id,
        "pipeline": pipeline,
        "seed": result.seed,
        "branch": getattr(result, "branch", None),
        "semi_matching": _picks(result.semi_matching),
        "events": [e.to_dict() for e in result.events],
    }
    if hasattr(result, "matching"):
        data["matching"] = _picks(result.matching)
    if hasattr(result, "three_matching"):
        tm = result.three_matching
        data["three_matching"] = {
            "sets": [sorted(s, reverse=True) for s in tm.sets],
            "events": [
                [ev.time, ev.action, ev.edge[0], ev.edge[1], ev.set_id] for ev in tm.event_log
            ],
        }
    return data


def write_run_log(path: Union[str, Path], instance_id: str, pipeline: str, result: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(run_log_to_dict(instance_id, pipeline, result), indent=1, sort_keys=True),
        encoding="utf-8",
    )
    return path


def read_run_log(path: Union[str, Path]) -> RunLog:
    """Load a run log written by write_run_log."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"{path}: line {e.lineno}: {e.msg}", line=e.lineno)
    try:
        three = raw.get("three_matching")
        matching = raw.get("matching")
        return RunLog(
            instance_id=str(raw["instance_id"]),
            pipeline=str(raw["pipeline"]),
            seed=raw.get("seed"),
            branch=raw.get("branch"),
            semi_matching=SemiMatching(tuple(PickedEdge(*e) for e in raw["semi_matching"])),
            matching=None if matching is None else Matching(tuple(PickedEdge(*e) for e in matching)),
            three_matching=(
                None
                if three is None
                else ThreeMatching(
                    sets=tuple(frozenset(s) for s in three["sets"]),
                    event_log=tuple(
                        ThreeMatchEvent(t, action, (o, i), sid)
                        for t, action, o, i, sid in three["events"]
                    ),
                )
            ),
            events=tuple(
                RunEvent(e["time"], e["kind"], dict(e.get("payload", {}))) for e in raw["events"]
            ),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InstanceFormatError(f"{path}: malformed run log: {e}")
