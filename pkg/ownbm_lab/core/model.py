"""
Instance model for online windowed non-bipartite matching.

Vertices are numbered 1..n in arrival order and vertex t arrives at time step t.
An edge (j, i) points from the later vertex j (its origin) back to an earlier
vertex i (its terminal) at most d steps before it, and becomes known when j
arrives. A structure picked online must commit every edge (j, i) no later than
time i + d.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import (
    Any,
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

logger = logging.getLogger(__name__)

EDGE_MODE = "edge"
VERTEX_MODE = "vertex"
WEIGHT_MODES = [EDGE_MODE, VERTEX_MODE]

CREATE_PAIR = "create_pair"
EXTEND_TO_TRIPLE = "extend_to_triple"
DELETE_EDGE_AND_REPAIR = "delete_edge_and_repair"
THREE_MATCH_ACTIONS = [CREATE_PAIR, EXTEND_TO_TRIPLE, DELETE_EDGE_AND_REPAIR]

# Run-log kinds that commit an edge and are therefore bound by terminal + d.
PICK_EVENT_KINDS = ("finalize", "emit", "pick", CREATE_PAIR, EXTEND_TO_TRIPLE)


class InstanceError(ValueError):
    """Raised when an operation that needs a valid instance gets an invalid one."""


class MeasureError(ValueError):
    """Raised when a weight measure does not apply to the instance or structure."""


class InvariantError(RuntimeError):
    """A runtime invariant broke. Valid inputs never trigger this."""

    def __init__(self, message: str, report: Any = None) -> None:
        super().__init__(message)
        self.report = report


def _is_weight(value: Any) -> bool:
    return (
        isinstance(value, (int, float))
        and not isinstance(value, bool)
        and math.isfinite(value)
        and value >= 0
    )


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class Edge:
    """A directed edge (origin, terminal) with an optional edge weight."""

    origin: int
    terminal: int
    weight: Optional[float] = None

    @property
    def key(self) -> Tuple[int, int]:
        return (self.origin, self.terminal)

    @property
    def gap(self) -> int:
        return self.origin - self.terminal


@dataclass(frozen=True)
class Instance:
    """
    An OWNBM instance.

    Construction never fails on bad data; call validate_instance() to get the
    list of problems. Lists passed in are frozen into tuples.
    """

    n: int
    d: int
    weight_mode: str = EDGE_MODE
    edges: Tuple[Edge, ...] = ()
    vertex_weights: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        edges = tuple(e if isinstance(e, Edge) else Edge(*e) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.vertex_weights is not None:
            object.__setattr__(self, "vertex_weights", tuple(self.vertex_weights))

    @cached_property
    def _edge_index(self) -> Dict[Tuple[int, int], Edge]:
        return {e.key: e for e in self.edges}

    @cached_property
    def _outgoing(self) -> Dict[int, List[Edge]]:
        out: Dict[int, List[Edge]] = {}
        for e in sorted(self.edges, key=lambda e: (e.origin, e.terminal)):
            out.setdefault(e.origin, []).append(e)
        return out

    @cached_property
    def _incoming(self) -> Dict[int, List[Edge]]:
        into: Dict[int, List[Edge]] = {}
        for e in sorted(self.edges, key=lambda e: (e.terminal, e.origin)):
            into.setdefault(e.terminal, []).append(e)
        return into

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def has_edge(self, origin: int, terminal: int) -> bool:
        return (origin, terminal) in self._edge_index

    def edge(self, origin: int, terminal: int) -> Optional[Edge]:
        return self._edge_index.get((origin, terminal))

    def edges_from(self, origin: int) -> List[Edge]:
        """Edges revealed when `origin` arrives, by increasing terminal."""
        return list(self._outgoing.get(origin, []))

    def edges_into(self, terminal: int) -> List[Edge]:
        """Edges ending at `terminal`, by increasing origin."""
        return list(self._incoming.get(terminal, []))

    def edge_weight(self, origin: int, terminal: int) -> float:
        """Weight of edge (origin, terminal) in edge mode."""
        e = self._edge_index.get((origin, terminal))
        if e is None:
            raise KeyError(f"No edge ({origin},{terminal})")
        if self.weight_mode != EDGE_MODE or e.weight is None:
            raise MeasureError("Edge weights exist only in edge mode")
        return float(e.weight)

    def vertex_weight(self, vertex: int) -> float:
        if self.weight_mode != VERTEX_MODE or self.vertex_weights is None:
            raise MeasureError("Vertex weights exist only in vertex mode")
        if not 1 <= vertex <= self.n:
            raise KeyError(f"Unknown vertex {vertex}")
        return float(self.vertex_weights[vertex - 1])

    def pair_weight(self, origin: int, terminal: int) -> float:
        """Contribution of edge (origin, terminal) to a matching's weight."""
        if self.weight_mode == VERTEX_MODE:
            if not self.has_edge(origin, terminal):
                raise KeyError(f"No edge ({origin},{terminal})")
            return self.vertex_weight(origin) + self.vertex_weight(terminal)
        return self.edge_weight(origin, terminal)

    def with_edge_weights(self, weigh: Callable[[Edge], float]) -> "Instance":
        """Edge-mode copy of this instance with weights computed per edge."""
        return Instance(
            n=self.n,
            d=self.d,
            weight_mode=EDGE_MODE,
            edges=tuple(Edge(e.origin, e.terminal, float(weigh(e))) for e in self.edges),
        )


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a validator: ok, or the list of violations found."""

    violations: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def merge(self, other: "ValidationReport") -> "ValidationReport":
        return ValidationReport(self.violations + other.violations)

    @classmethod
    def of(cls, violations: Iterable[str]) -> "ValidationReport":
        return cls(tuple(violations))


@dataclass(frozen=True)
class ArrivalEvent:
    """Everything revealed at one time step."""

    time: int
    vertex: int
    revealed_edges: Tuple[Edge, ...]
    vertex_weight: Optional[float] = None


@dataclass(frozen=True)
class PickedEdge:
    """An edge committed online at `pick_time`."""

    origin: int
    terminal: int
    pick_time: int

    @property
    def key(self) -> Tuple[int, int]:
        return (self.origin, self.terminal)


def _as_picked(entries: Iterable[Any]) -> Tuple[PickedEdge, ...]:
    return tuple(e if isinstance(e, PickedEdge) else PickedEdge(*e) for e in entries)


@dataclass(frozen=True)
class SemiMatching:
    """Edges with at most one out-edge and one in-edge per vertex."""

    entries: Tuple[PickedEdge, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", _as_picked(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[PickedEdge]:
        return iter(self.entries)

    @cached_property
    def _by_terminal(self) -> Dict[int, PickedEdge]:
        return {e.terminal: e for e in self.entries}

    @cached_property
    def _by_origin(self) -> Dict[int, PickedEdge]:
        return {e.origin: e for e in self.entries}

    def incoming(self, vertex: int) -> Optional[PickedEdge]:
        return self._by_terminal.get(vertex)

    def outgoing(self, vertex: int) -> Optional[PickedEdge]:
        return self._by_origin.get(vertex)

    def pairs(self) -> List[Tuple[int, int]]:
        return [e.key for e in self.entries]


class SemiMatchingBuilder:
    """Mutable semi-matching grown one pick at a time during a run."""

    def __init__(self) -> None:
        self.entries: List[PickedEdge] = []
        self._by_terminal: Dict[int, PickedEdge] = {}
        self._by_origin: Dict[int, PickedEdge] = {}

    def add(self, entry: PickedEdge) -> None:
        if entry.terminal in self._by_terminal or entry.origin in self._by_origin:
            raise InvariantError(
                f"({entry.origin},{entry.terminal}) would break the semi-matching"
            )
        self.entries.append(entry)
        self._by_terminal[entry.terminal] = entry
        self._by_origin[entry.origin] = entry

    def incoming(self, vertex: int) -> Optional[PickedEdge]:
        return self._by_terminal.get(vertex)

    def outgoing(self, vertex: int) -> Optional[PickedEdge]:
        return self._by_origin.get(vertex)

    def freeze(self) -> SemiMatching:
        return SemiMatching(tuple(self.entries))


@dataclass(frozen=True)
class Matching:
    """Edges no two of which share a vertex. Entries are never retracted."""

    entries: Tuple[PickedEdge, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", _as_picked(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[PickedEdge]:
        return iter(self.entries)

    def pairs(self) -> List[Tuple[int, int]]:
        return [e.key for e in self.entries]


@dataclass(frozen=True)
class ThreeMatchEvent:
    """One step of online 3-matching construction."""

    time: int
    action: str
    edge: Tuple[int, int]
    set_id: int


@dataclass(frozen=True)
class ThreeMatching:
    """Disjoint vertex sets of size 2 or 3 plus the log that built them."""

    sets: Tuple[FrozenSet[int], ...] = ()
    event_log: Tuple[ThreeMatchEvent, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))
        object.__setattr__(self, "event_log", tuple(self.event_log))

    def __len__(self) -> int:
        return len(self.sets)

    @property
    def covered(self) -> FrozenSet[int]:
        return frozenset(v for s in self.sets for v in s)


@dataclass(frozen=True)
class RunEvent:
    """A record in a pipeline run log."""

    time: int
    kind: str
    payload: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"time": self.time, "kind": self.kind, "payload": dict(self.payload)}


def validate_instance(inst: Instance) -> ValidationReport:
    """Report every violated instance invariant, naming the offending edge or vertex."""
    errors: List[str] = []

    if not _is_int(inst.n) or inst.n < 1:
        errors.append(f"n must be a positive integer, got {inst.n!r}")
    if not _is_int(inst.d) or inst.d < 0:
        errors.append(f"d must be a non-negative integer, got {inst.d!r}")
    if inst.weight_mode not in WEIGHT_MODES:
        errors.append(
            f"Invalid mode '{inst.weight_mode}'. Must be one of: {WEIGHT_MODES}"
        )
    if errors:
        return ValidationReport.of(errors)

    if inst.weight_mode == VERTEX_MODE:
        if inst.vertex_weights is None:
            errors.append("vertex mode requires vertex_weights")
        else:
            if len(inst.vertex_weights) != inst.n:
                errors.append(
                    f"vertex_weights has {len(inst.vertex_weights)} entries, expected n={inst.n}"
                )
            for v, w in enumerate(inst.vertex_weights, start=1):
                if not _is_weight(w):
                    errors.append(f"vertex {v}: weight {w!r} is not a finite non-negative number")
    elif inst.vertex_weights is not None:
        errors.append("vertex_weights present in edge mode")

    seen: Counter = Counter()
    for e in inst.edges:
        label = f"edge ({e.origin},{e.terminal})"
        if not (_is_int(e.origin) and _is_int(e.terminal)):
            errors.append(f"{label}: endpoints must be integers")
            continue
        seen[e.key] += 1
        if seen[e.key] == 2:
            errors.append(f"{label}: duplicate edge")
        for v in (e.origin, e.terminal):
            if not 1 <= v <= inst.n:
                errors.append(f"{label}: vertex {v} out of range 1..{inst.n}")
        if e.origin <= e.terminal:
            errors.append(f"{label}: origin must exceed terminal")
        elif e.gap > inst.d:
            errors.append(f"{label}: window: gap {e.gap} > d={inst.d}")
        if inst.weight_mode == EDGE_MODE:
            if not _is_weight(e.weight):
                errors.append(
                    f"{label}: weight {e.weight!r} is not a finite non-negative number"
                )
        elif e.weight is not None:
            errors.append(f"{label}: edge weight given in vertex mode")

    return ValidationReport.of(errors)


def require_valid(inst: Instance) -> None:
    """Raise InstanceError listing all violations if `inst` is invalid."""
    report = validate_instance(inst)
    if not report.ok:
        logger.warning(
            "Rejected instance n=%d d=%d: %d violation(s)", inst.n, inst.d, len(report.violations)
        )
        raise InstanceError("Invalid instance: " + "; ".join(report.violations))


def stream(inst: Instance) -> Iterator[ArrivalEvent]:
    """Replay the instance as arrivals: event t reveals vertex t and its out-edges."""
    require_valid(inst)
    return _arrivals(inst)


def _arrivals(inst: Instance) -> Iterator[ArrivalEvent]:
    for t in inst.vertices:
        yield ArrivalEvent(
            time=t,
            vertex=t,
            revealed_edges=tuple(inst.edges_from(t)),
            vertex_weight=(
                inst.vertex_weight(t) if inst.weight_mode == VERTEX_MODE else None
            ),
        )


def _check_picks(inst: Instance, entries: Sequence[PickedEdge], label: str) -> List[str]:
    errors: List[str] = []
    seen = set()
    for e in entries:
        tag = f"{label} ({e.origin},{e.terminal})"
        if e.key in seen:
            errors.append(f"{tag}: listed twice")
        seen.add(e.key)
        if not inst.has_edge(e.origin, e.terminal):
            errors.append(f"{tag}: not an edge of the instance")
            continue
        if e.pick_time < e.origin:
            errors.append(f"{tag}: picked at {e.pick_time} before the edge was revealed")
        if e.pick_time > e.terminal + inst.d:
            errors.append(
                f"{tag}: picked at {e.pick_time} after deadline {e.terminal + inst.d}"
            )
    return errors


def validate_semi_matching(inst: Instance, sm: SemiMatching) -> ValidationReport:
    """
    Check a semi-matching against the instance.

    Every entry must be an instance edge picked between its reveal and its
    deadline, and no vertex may originate or terminate more than one entry.

    Args:
        inst: Instance the semi-matching was built on
        sm: Semi-matching to check

    Returns:
        ValidationReport listing every violation found
    """
    errors = _check_picks(inst, sm.entries, "semi-matching edge")
    for v, count in Counter(e.origin for e in sm.entries).items():
        if count > 1:
            errors.append(f"vertex {v} originates {count} edges")
    for v, count in Counter(e.terminal for e in sm.entries).items():
        if count > 1:
            errors.append(f"vertex {v} terminates {count} edges")
    return ValidationReport.of(errors)


def validate_matching(inst: Instance, matching: Matching) -> ValidationReport:
    """
    Check that a matching uses instance edges on time and touches each vertex once.

    Args:
        inst: Instance the matching was built on
        matching: Matching to check

    Returns:
        ValidationReport listing every violation found
    """
    errors = _check_picks(inst, matching.entries, "matching edge")
    incidence = Counter(v for e in matching.entries for v in e.key)
    for v in sorted(incidence):
        count = incidence[v]
        if count == 2:
            errors.append(f"vertex {v} incident twice")
        elif count > 2:
            errors.append(f"vertex {v} incident {count} times")
    return ValidationReport.of(errors)


def _induced_edges(inst: Instance, members: FrozenSet[int]) -> int:
    ordered = sorted(members)
    return sum(
        1
        for a in range(len(ordered))
        for b in range(a + 1, len(ordered))
        if inst.has_edge(ordered[b], ordered[a])
    )


def _fmt_set(members: FrozenSet[int]) -> str:
    return "{" + ",".join(str(v) for v in sorted(members, reverse=True)) + "}"


def validate_three_matching(inst: Instance, tm: ThreeMatching) -> ValidationReport:
    """
    Check the sets of a 3-matching and the timing of its event log.

    Sets must be disjoint, 2-sets must be edges and 3-sets must induce at
    least two edges. Each logged action must name an instance edge and
    happen before that edge's deadline.

    Args:
        inst: Vertex-mode instance the 3-matching was built on
        tm: 3-matching to check

    Returns:
        ValidationReport listing every violation found
    """
    errors: List[str] = []
    owner: Dict[int, int] = {}
    for index, members in enumerate(tm.sets):
        if len(members) not in (2, 3):
            errors.append(f"set {_fmt_set(members)} has size {len(members)}, expected 2 or 3")
        for v in members:
            if not 1 <= v <= inst.n:
                errors.append(f"set {_fmt_set(members)}: vertex {v} out of range")
            if v in owner:
                errors.append(f"vertex {v} in more than one set")
            owner[v] = index
        if len(members) == 2:
            high, low = max(members), min(members)
            if not inst.has_edge(high, low):
                errors.append(f"2-set {_fmt_set(members)} is not an edge")
        elif len(members) == 3:
            found = _induced_edges(inst, members)
            if found < 2:
                errors.append(
                    f"3-set {_fmt_set(members)} needs ≥2 induced edges, found {found}"
                )

    for event in tm.event_log:
        origin, terminal = event.edge
        tag = f"{event.action} ({origin},{terminal}) at t={event.time}"
        if event.action not in THREE_MATCH_ACTIONS:
            errors.append(f"{tag}: unknown action")
            continue
        if not inst.has_edge(origin, terminal):
            errors.append(f"{tag}: not an edge of the instance")
        if event.action == DELETE_EDGE_AND_REPAIR:
            if event.time > origin + inst.d:
                errors.append(f"{tag}: deletion after deadline {origin + inst.d}")
        elif event.time > terminal + inst.d:
            errors.append(f"{tag}: pick after deadline {terminal + inst.d}")

    return ValidationReport.of(errors)


def audit_deadlines(inst: Instance, events: Iterable[RunEvent]) -> ValidationReport:
    """Check every pick and deletion in a run log against its window deadline."""
    errors: List[str] = []
    for event in events:
        if event.kind not in PICK_EVENT_KINDS and event.kind != DELETE_EDGE_AND_REPAIR:
            continue
        origin = event.payload["origin"]
        terminal = event.payload["terminal"]
        if event.kind == DELETE_EDGE_AND_REPAIR:
            if event.time > origin + inst.d:
                errors.append(
                    f"deletion of ({origin},{terminal}) at t={event.time} > {origin + inst.d}"
                )
        elif event.time > terminal + inst.d:
            errors.append(
                f"{event.kind} of ({origin},{terminal}) at t={event.time} > {terminal + inst.d}"
            )
    return ValidationReport.of(errors)


Structure = Union[Matching, SemiMatching, ThreeMatching]


def measure(inst: Instance, structure: Structure) -> float:
    """
    Weight of a structure under the instance's objective.

    Edge mode sums edge weights; vertex mode sums both endpoint weights per
    edge; a 3-matching sums the weight of every vertex in any of its sets.
    """
    if isinstance(structure, ThreeMatching):
        if inst.weight_mode != VERTEX_MODE:
            raise MeasureError("3-matching weight is defined for vertex mode only")
        return math.fsum(inst.vertex_weight(v) for s in structure.sets for v in s)
    if isinstance(structure, (Matching, SemiMatching)):
        return math.fsum(inst.pair_weight(e.origin, e.terminal) for e in structure)
    raise MeasureError(f"Cannot measure {type(structure).__name__}")
