"""
Vertex-weighted pipeline.

A fair coin picks one of two perturbed-greedy branches that build a
semi-matching online:

* destination: each arriving vertex j takes the white earlier neighbour k
  maximizing w_k * (1 - e^(Y_k - 1)) and turns it black;
* origin: d steps after vertex i arrived, i takes the white later neighbour
  maximizing the same score and turns that neighbour black. d weightless
  dummy steps flush the tail of the stream.

The semi-matching is then folded online into a 3-matching whose weight is at
least the semi-matching's half-weight.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Set, Tuple

import numpy as np

from .model import (
    CREATE_PAIR,
    DELETE_EDGE_AND_REPAIR,
    EXTEND_TO_TRIPLE,
    VERTEX_MODE,
    Instance,
    InstanceError,
    InvariantError,
    PickedEdge,
    RunEvent,
    SemiMatching,
    SemiMatchingBuilder,
    ThreeMatchEvent,
    ThreeMatching,
    require_valid,
    stream,
)

logger = logging.getLogger(__name__)

ORIGIN = "origin"
DESTINATION = "destination"
BRANCHES = [ORIGIN, DESTINATION]

# Expected half-weight is at least this fraction of the offline optimum.
HALF_WEIGHT_FACTOR = 0.5 * (1 - 1 / math.e)


class StepOrderError(RuntimeError):
    """Raised when a branch step is called out of order or on the wrong branch."""


def perturbed_score(weight: float, y: float) -> float:
    """Discounted weight w * (1 - e^(y - 1)) used by both greedy branches."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"Perturbation must lie in [0, 1], got {y}")
    return weight * (1.0 - math.exp(y - 1.0))


@dataclass
class VWState:
    """State of one vertex-weighted semi-matching run."""

    inst: Instance
    branch: str
    rng: Any
    perturbations: Dict[int, float] = field(default_factory=dict)
    overrides: Mapping[int, float] = field(default_factory=dict)
    black: Set[int] = field(default_factory=set)
    time: int = 0
    semi: SemiMatchingBuilder = field(default_factory=SemiMatchingBuilder)
    events: List[RunEvent] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.branch not in BRANCHES:
            raise ValueError(f"Invalid branch '{self.branch}'. Must be one of: {BRANCHES}")

    @property
    def dummy_count(self) -> int:
        return self.inst.d if self.branch == ORIGIN else 0

    def color(self, vertex: int) -> str:
        return "black" if vertex in self.black else "white"

    def _advance(self, t: int, branch: str) -> None:
        if self.branch != branch:
            raise StepOrderError(f"{branch} step called on a {self.branch} run")
        if t != self.time + 1:
            raise StepOrderError(f"Step {t} called after step {self.time}")
        if t > self.inst.n + self.dummy_count:
            raise StepOrderError(f"Step {t} is past the end of the stream")
        self.time = t
        # The draw is consumed even when overridden so replays stay aligned.
        y = float(self.rng.random())
        self.perturbations[t] = float(self.overrides.get(t, y))
        self.events.append(RunEvent(t, "draw", {"vertex": t, "y": self.perturbations[t]}))

    def _score(self, vertex: int) -> float:
        return perturbed_score(self.inst.vertex_weight(vertex), self.perturbations[vertex])

    def _argmax(self, candidates: List[int]) -> int:
        # Ascending scan with strict comparison: ties go to the lowest index.
        best = candidates[0]
        best_score = self._score(best)
        for k in candidates[1:]:
            score = self._score(k)
            if score > best_score:
                best, best_score = k, score
        return best

    def destination_step(self, j: int) -> Optional[PickedEdge]:
        """Arriving vertex j claims its best white terminal."""
        self._advance(j, DESTINATION)
        candidates = [
            e.terminal for e in self.inst.edges_from(j) if e.terminal not in self.black
        ]
        if not candidates:
            return None
        i = self._argmax(candidates)
        self.black.add(i)
        return self._pick(j, i, j)

    def origin_step(self, t: int) -> Optional[PickedEdge]:
        """Vertex t - d, whose window just closed, claims its best white origin."""
        self._advance(t, ORIGIN)
        i = t - self.inst.d
        if i <= 0 or i > self.inst.n:
            return None
        candidates = [e.origin for e in self.inst.edges_into(i) if e.origin not in self.black]
        if not candidates:
            return None
        j = self._argmax(candidates)
        self.black.add(j)
        return self._pick(j, i, t)

    def _pick(self, origin: int, terminal: int, time: int) -> PickedEdge:
        entry = PickedEdge(origin, terminal, time)
        self.semi.add(entry)
        self.events.append(
            RunEvent(time, "pick", {"origin": origin, "terminal": terminal})
        )
        logger.debug("%s branch picked (%d,%d) at t=%d", self.branch, origin, terminal, time)
        return entry


def half_weight(inst: Instance, semi: SemiMatching, branch: str) -> float:
    """Origin weights (origin branch) or terminal weights (destination branch) of M'."""
    if branch not in BRANCHES:
        raise ValueError(f"Invalid branch '{branch}'. Must be one of: {BRANCHES}")
    if branch == ORIGIN:
        return math.fsum(inst.vertex_weight(e.origin) for e in semi)
    return math.fsum(inst.vertex_weight(e.terminal) for e in semi)


class PathChain:
    """
    Online 3-matching built along the paths of a semi-matching.

    Semi-matching edges strictly decrease in vertex index, so they form simple
    paths. Each set is a contiguous piece of one path, stored head first. The
    head of a set is removable while its own incoming edge is unprocessed.
    """

    def __init__(self) -> None:
        self.sets: Dict[int, List[int]] = {}
        self.membership: Dict[int, int] = {}
        self.processed: Set[int] = set()
        self.log: List[ThreeMatchEvent] = []
        self._next_id = 0

    def set_of(self, vertex: int) -> Optional[int]:
        return self.membership.get(vertex)

    def is_head(self, vertex: int) -> bool:
        sid = self.membership.get(vertex)
        return (
            sid is not None
            and self.sets[sid][0] == vertex
            and vertex not in self.processed
        )

    def _create_pair(self, origin: int, terminal: int, time: int) -> ThreeMatchEvent:
        sid = self._next_id
        self._next_id += 1
        self.sets[sid] = [origin, terminal]
        self.membership[origin] = sid
        self.membership[terminal] = sid
        return ThreeMatchEvent(time, CREATE_PAIR, (origin, terminal), sid)

    def three_match_step(
        self, vertex: int, incoming: Optional[PickedEdge], time: int
    ) -> List[ThreeMatchEvent]:
        """Place vertex's incoming semi-matching edge, popping vertex from a triple if needed."""
        if vertex in self.processed:
            raise InvariantError(f"Vertex {vertex} processed twice")
        if self.processed and vertex < max(self.processed):
            raise InvariantError(f"Vertex {vertex} processed out of order")
        events: List[ThreeMatchEvent] = []
        if incoming is None:
            self.processed.add(vertex)
            return events

        origin = incoming.origin
        if origin in self.membership:
            raise InvariantError(f"Origin {origin} placed before its out-edge was processed")

        sid = self.membership.get(vertex)
        if sid is None:
            events.append(self._create_pair(origin, vertex, time))
        else:
            members = self.sets[sid]
            if members[0] != vertex:
                raise InvariantError(f"Vertex {vertex} is not the head of its set")
            if len(members) == 2:
                members.insert(0, origin)
                self.membership[origin] = sid
                events.append(ThreeMatchEvent(time, EXTEND_TO_TRIPLE, (origin, vertex), sid))
            elif len(members) == 3:
                # Drop the head's out-edge; the remaining two form a semi-matching edge.
                del members[0]
                del self.membership[vertex]
                events.append(
                    ThreeMatchEvent(time, DELETE_EDGE_AND_REPAIR, (vertex, members[0]), sid)
                )
                events.append(self._create_pair(origin, vertex, time))
            else:
                raise InvariantError(f"Set {sid} has {len(members)} members")

        self.processed.add(vertex)
        self.log.extend(events)
        for event in events:
            logger.debug("3-matching %s %s in set %d", event.action, event.edge, event.set_id)
        return events

    def freeze(self) -> ThreeMatching:
        return ThreeMatching(
            sets=tuple(frozenset(self.sets[sid]) for sid in sorted(self.sets)),
            event_log=tuple(self.log),
        )


@dataclass(frozen=True)
class VertexRunResult:
    """Everything one vertex-pipeline run produced."""

    seed: Optional[int]
    branch: str
    semi_matching: SemiMatching
    three_matching: ThreeMatching
    half_weight: float
    perturbations: Dict[int, float]
    events: Tuple[RunEvent, ...]


def run_vertex_pipeline(
    inst: Instance,
    seed: Optional[int] = 0,
    branch: Optional[str] = None,
    perturbations: Optional[Mapping[int, float]] = None,
    rng: Any = None,
) -> VertexRunResult:
    """
    Run the vertex-weighted pipeline with a seeded generator.

    The clock runs to n + d in both branches. At time t the branch step runs
    first, then vertex t - d is placed into the 3-matching. `branch` and
    `perturbations` pin the coin and individual Y values for replays.
    """
    require_valid(inst)
    if inst.weight_mode != VERTEX_MODE:
        raise InstanceError("The vertex pipeline needs a vertex-mode instance")
    if rng is None:
        rng = np.random.default_rng(seed)

    coin = ORIGIN if rng.random() < 0.5 else DESTINATION
    chosen = branch if branch is not None else coin
    state = VWState(inst, chosen, rng, overrides=dict(perturbations or {}))
    state.events.append(RunEvent(0, "branch", {"branch": chosen}))
    chain = PathChain()
    arrivals = stream(inst)

    for t in range(1, inst.n + inst.d + 1):
        if t <= inst.n:
            next(arrivals)
            if chosen == DESTINATION:
                state.destination_step(t)
        if chosen == ORIGIN:
            state.origin_step(t)
        i = t - inst.d
        if 1 <= i <= inst.n:
            for event in chain.three_match_step(i, state.semi.incoming(i), t):
                origin, terminal = event.edge
                state.events.append(
                    RunEvent(
                        t,
                        event.action,
                        {"origin": origin, "terminal": terminal, "set": event.set_id},
                    )
                )

    semi = state.semi.freeze()
    result = VertexRunResult(
        seed=seed,
        branch=chosen,
        semi_matching=semi,
        three_matching=chain.freeze(),
        half_weight=half_weight(inst, semi, chosen),
        perturbations=dict(state.perturbations),
        events=tuple(state.events),
    )
    logger.debug(
        "vertex run seed=%s branch=%s: %d semi-matching edges, half-weight %.6g",
        seed,
        chosen,
        len(semi),
        result.half_weight,
    )
    return result
