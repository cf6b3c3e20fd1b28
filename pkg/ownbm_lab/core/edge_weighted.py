"""
Edge-weighted pipeline.

Each vertex i doubles as a bidder and an item of a combinatorial auction in
which bidder i values a set S of items at the heaviest edge (j, i) with j in S.
Items are allocated greedily by marginal valuation as they arrive. Once a
bidder's window closes its best item becomes a semi-matching edge, and a
green/red coloring in vertex order turns the semi-matching into a matching
that keeps each semi-matching edge with probability 1/2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple, Union

import numpy as np

from .model import (
    EDGE_MODE,
    Instance,
    InstanceError,
    InvariantError,
    Matching,
    PickedEdge,
    RunEvent,
    SemiMatching,
    SemiMatchingBuilder,
    require_valid,
    stream,
)

logger = logging.getLogger(__name__)

GREEN = "green"
RED = "red"


class AllocationError(RuntimeError):
    """Raised when auction or rounding steps are called out of order or twice."""


def _check_vertex(inst: Instance, vertex: int, role: str) -> None:
    if not 1 <= vertex <= inst.n:
        raise KeyError(f"Unknown {role} {vertex}")


def valuation(inst: Instance, bidder: int, items: Iterable[int]) -> float:
    """Bidder's value for an item set: its heaviest edge from the set, or 0."""
    _check_vertex(inst, bidder, "bidder")
    best = 0.0
    for item in items:
        _check_vertex(inst, item, "item")
        if inst.has_edge(item, bidder):
            best = max(best, inst.edge_weight(item, bidder))
    return best


def allocation_value(inst: Instance, allocation: Dict[int, Iterable[int]]) -> float:
    return math.fsum(valuation(inst, b, items) for b, items in allocation.items())


def allocation_from_matching(
    inst: Instance, matching: Union[Matching, Iterable[Tuple[int, int]]]
) -> Dict[int, FrozenSet[int]]:
    """
    Allocation worth exactly the matching's weight.

    A matched edge (j, i) gives bidder i the items {i, j} and bidder j nothing;
    every unmatched vertex keeps its own item.
    """
    pairs = matching.pairs() if isinstance(matching, Matching) else list(matching)
    allocation: Dict[int, FrozenSet[int]] = {}
    matched: Set[int] = set()
    for origin, terminal in pairs:
        allocation[terminal] = frozenset({terminal, origin})
        allocation[origin] = frozenset()
        matched.update((origin, terminal))
    for v in inst.vertices:
        if v not in matched:
            allocation[v] = frozenset({v})
    return allocation


@dataclass
class AuctionState:
    """Greedy allocation in progress."""

    inst: Instance
    allocations: Dict[int, Set[int]] = field(default_factory=dict)
    valuations: Dict[int, float] = field(default_factory=dict)
    owners: Dict[int, Optional[int]] = field(default_factory=dict)
    finalized: Set[int] = field(default_factory=set)
    time: int = 0
    events: List[RunEvent] = field(default_factory=list)

    def marginal_valuation(self, bidder: int, item: int) -> float:
        """Gain in the bidder's value from also receiving `item`."""
        # Bidders that have not arrived yet gain nothing.
        if bidder > self.time or not self.inst.has_edge(item, bidder):
            return 0.0
        gain = self.inst.edge_weight(item, bidder) - self.valuations.get(bidder, 0.0)
        return max(0.0, gain)

    def allocate_item(self, item: int) -> Optional[int]:
        """Give the arriving item to the bidder with the largest positive marginal."""
        if item in self.owners:
            raise AllocationError(f"Item {item} was already allocated")
        if item != self.time + 1:
            raise AllocationError(
                f"Item {item} allocated out of order (last item was {self.time})"
            )
        self.time = item

        winner: Optional[int] = None
        best = 0.0
        for e in self.inst.edges_from(item):
            gain = self.marginal_valuation(e.terminal, item)
            if gain > best:
                winner, best = e.terminal, gain

        self.owners[item] = winner
        if winner is not None:
            self.allocations.setdefault(winner, set()).add(item)
            self.valuations[winner] = self.inst.edge_weight(item, winner)
        self.events.append(
            RunEvent(item, "allocate", {"item": item, "bidder": winner, "marginal": best})
        )
        logger.debug("item %d -> bidder %s (marginal %.6g)", item, winner, best)
        return winner

    def freeze_time(self, bidder: int) -> int:
        """Time after which no item can reach the bidder any more."""
        return min(bidder + self.inst.d, self.inst.n)

    def finalize_bidder(self, bidder: int, time: int) -> Optional[PickedEdge]:
        """Turn a frozen bidder's best item into a semi-matching edge."""
        if bidder in self.finalized:
            raise AllocationError(f"Bidder {bidder} finalized twice")
        if time < self.freeze_time(bidder) or self.time < self.freeze_time(bidder):
            raise AllocationError(
                f"Bidder {bidder} finalized at {time}, before freeze time {self.freeze_time(bidder)}"
            )
        self.finalized.add(bidder)

        if self.valuations.get(bidder, 0.0) <= 0:
            return None
        items = self.allocations[bidder]
        origin = min(items, key=lambda k: (-self.inst.edge_weight(k, bidder), k))
        entry = PickedEdge(origin, bidder, time)
        self.events.append(
            RunEvent(
                time,
                "finalize",
                {
                    "origin": origin,
                    "terminal": bidder,
                    "weight": self.inst.edge_weight(origin, bidder),
                },
            )
        )
        return entry

    @property
    def total_valuation(self) -> float:
        return math.fsum(self.valuations.values())


@dataclass
class ColoringState:
    """Green/red colors assigned so far and the coin source."""

    rng: Any
    colors: Dict[int, str] = field(default_factory=dict)
    last_vertex: int = 0
    events: List[RunEvent] = field(default_factory=list)

    def color_and_round(
        self,
        semi: Union[SemiMatching, SemiMatchingBuilder],
        vertex: int,
        time: int,
    ) -> Optional[PickedEdge]:
        """
        Color a vertex with an incoming semi-matching edge and keep that edge if green.

        A vertex whose out-edge (vertex, k) is in the semi-matching takes the
        opposite of k's color; any other colored vertex flips a fair coin.
        """
        if vertex <= self.last_vertex:
            raise AllocationError(
                f"Vertex {vertex} colored out of order (last was {self.last_vertex})"
            )
        self.last_vertex = vertex

        incoming = semi.incoming(vertex)
        if incoming is None:
            return None

        outgoing = semi.outgoing(vertex)
        if outgoing is not None:
            partner = self.colors.get(outgoing.terminal)
            if partner is None:
                raise InvariantError(
                    f"Vertex {outgoing.terminal} is uncolored when coloring {vertex}"
                )
            color = RED if partner == GREEN else GREEN
        else:
            color = GREEN if self.rng.random() < 0.5 else RED
        self.colors[vertex] = color
        self.events.append(
            RunEvent(
                time,
                "color",
                {"vertex": vertex, "color": color, "forced": outgoing is not None},
            )
        )

        if color != GREEN:
            return None
        entry = PickedEdge(incoming.origin, vertex, time)
        self.events.append(
            RunEvent(time, "emit", {"origin": incoming.origin, "terminal": vertex})
        )
        return entry


@dataclass(frozen=True)
class EdgeRunResult:
    """Everything one edge-pipeline run produced."""

    seed: Optional[int]
    semi_matching: SemiMatching
    matching: Matching
    events: Tuple[RunEvent, ...]
    allocation: Dict[int, FrozenSet[int]]
    total_valuation: float


def run_edge_pipeline(
    inst: Instance, seed: Optional[int] = 0, rng: Any = None
) -> EdgeRunResult:
    """
    Run the full online pipeline on an edge-weighted instance.

    Items are allocated as they arrive. Bidder i is finalized and colored at
    time min(i + d, n), bidders in increasing order within a time step.
    """
    require_valid(inst)
    if inst.weight_mode != EDGE_MODE:
        raise InstanceError("The edge pipeline needs an edge-mode instance")
    if rng is None:
        rng = np.random.default_rng(seed)

    events: List[RunEvent] = []
    auction = AuctionState(inst, events=events)
    coloring = ColoringState(rng, events=events)
    semi = SemiMatchingBuilder()
    matched: List[PickedEdge] = []

    for arrival in stream(inst):
        t = arrival.time
        auction.allocate_item(arrival.vertex)
        if t == inst.n:
            due: Iterable[int] = range(max(1, t - inst.d), inst.n + 1)
        else:
            due = [t - inst.d] if t - inst.d >= 1 else []
        for bidder in due:
            entry = auction.finalize_bidder(bidder, t)
            if entry is not None:
                semi.add(entry)
            emitted = coloring.color_and_round(semi, bidder, t)
            if emitted is not None:
                matched.append(emitted)

    result = EdgeRunResult(
        seed=seed,
        semi_matching=semi.freeze(),
        matching=Matching(tuple(matched)),
        events=tuple(events),
        allocation={b: frozenset(items) for b, items in auction.allocations.items()},
        total_valuation=auction.total_valuation,
    )
    logger.debug(
        "edge run seed=%s: %d semi-matching edges, %d matched",
        seed,
        len(result.semi_matching),
        len(result.matching),
    )
    return result
