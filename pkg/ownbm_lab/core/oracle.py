"""
Exact offline optimum of an instance.

The optimum is the heaviest ordinary matching over the whole graph, ignoring
arrival order. Three exact methods are provided: exhaustive enumeration of all
matchings (edges taken in order, skipping any edge whose endpoint is already
used), a branch-and-bound search over edges sorted by weight, and a dynamic
program over vertex subsets for instances of up to 20 vertices. Vertex-mode
instances are solved by giving each edge (j, i) the weight w_j + w_i.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Set, Tuple

from .model import (
    EDGE_MODE,
    VERTEX_MODE,
    Edge,
    Instance,
    InstanceError,
    Matching,
    PickedEdge,
    require_valid,
)

logger = logging.getLogger(__name__)

EXHAUSTIVE = "exhaustive"
BRANCH_AND_BOUND = "branch-and-bound"
SUBSET_DP = "subset-dp"
AUTO = "auto"
METHODS = [EXHAUSTIVE, BRANCH_AND_BOUND, SUBSET_DP, AUTO]

DEFAULT_EDGE_CAP = 26
SUBSET_DP_MAX_N = 20
ENUMERATION_CAP = 20
ALLOCATION_ITEM_CAP = 10


class OracleCapExceeded(ValueError):
    """Raised when exhaustive search is asked to handle too many edges or items."""


@dataclass(frozen=True)
class OracleResult:
    """Optimal weight, one matching achieving it, and how it was found."""

    weight: float
    witness: Matching
    method: str
    nodes: int

    def to_dict(self) -> Dict[str, object]:
        return {
            "weight": self.weight,
            "witness": [[e.origin, e.terminal] for e in self.witness],
            "method": self.method,
            "nodes": self.nodes,
        }


def _as_witness(edges: List[Edge]) -> Matching:
    ordered = sorted(edges, key=lambda e: (e.terminal, e.origin))
    return Matching(tuple(PickedEdge(e.origin, e.terminal, e.origin) for e in ordered))


def _walk_matchings(edges: List[Edge], counter: List[int]) -> Iterator[List[Edge]]:
    chosen: List[Edge] = []
    used: Set[int] = set()

    def walk(k: int) -> Iterator[List[Edge]]:
        counter[0] += 1
        if k == len(edges):
            yield list(chosen)
            return
        yield from walk(k + 1)
        e = edges[k]
        if e.origin not in used and e.terminal not in used:
            chosen.append(e)
            used.update(e.key)
            yield from walk(k + 1)
            chosen.pop()
            used.difference_update(e.key)

    return walk(0)


def enumerate_matchings(
    inst: Instance, cap: int = ENUMERATION_CAP
) -> Iterator[Tuple[Tuple[int, int], ...]]:
    """Yield every matching of the instance exactly once, as (origin, terminal) tuples."""
    if inst.edge_count > cap:
        raise OracleCapExceeded(
            f"{inst.edge_count} edges exceed the enumeration cap of {cap}"
        )
    for found in _walk_matchings(list(inst.edges), [0]):
        yield tuple(e.key for e in found)


def _exhaustive(inst: Instance, cap: int) -> OracleResult:
    if inst.edge_count > cap:
        raise OracleCapExceeded(
            f"{inst.edge_count} edges exceed the exhaustive cap of {cap}; "
            f"use method '{BRANCH_AND_BOUND}'"
        )
    counter = [0]
    best_weight = 0.0
    best: List[Edge] = []
    for found in _walk_matchings(list(inst.edges), counter):
        weight = math.fsum(float(e.weight or 0.0) for e in found)
        if weight > best_weight:
            best_weight, best = weight, found
    return OracleResult(best_weight, _as_witness(best), EXHAUSTIVE, counter[0])


def _branch_and_bound(inst: Instance) -> OracleResult:
    edges = sorted(inst.edges, key=lambda e: (-float(e.weight or 0.0), e.origin, e.terminal))
    weights = [float(e.weight or 0.0) for e in edges]
    state = {"best": 0.0, "nodes": 0}
    best: List[Edge] = []
    chosen: List[Edge] = []
    used: Set[int] = set()

    def bound(k: int) -> float:
        # Every matching edge (u, v) weighs at most half of top(u) + top(v).
        top: Dict[int, float] = {}
        for e, w in zip(edges[k:], weights[k:]):
            if e.origin in used or e.terminal in used:
                continue
            for v in e.key:
                if w > top.get(v, 0.0):
                    top[v] = w
        return 0.5 * math.fsum(top.values())

    def search(k: int, value: float) -> None:
        nonlocal best
        state["nodes"] += 1
        if value > state["best"]:
            state["best"] = value
            best = list(chosen)
        if k == len(edges) or value + bound(k) <= state["best"]:
            return
        e = edges[k]
        if e.origin not in used and e.terminal not in used:
            chosen.append(e)
            used.update(e.key)
            search(k + 1, value + weights[k])
            chosen.pop()
            used.difference_update(e.key)
        search(k + 1, value)

    search(0, 0.0)
    return OracleResult(
        math.fsum(float(e.weight or 0.0) for e in best),
        _as_witness(best),
        BRANCH_AND_BOUND,
        int(state["nodes"]),
    )


def _subset_dp(inst: Instance) -> OracleResult:
    # best(mask) is the optimum on the vertices of mask; the lowest vertex in
    # mask is either left single or matched to a later neighbour in mask.
    if inst.n > SUBSET_DP_MAX_N:
        raise OracleCapExceeded(
            f"n={inst.n} exceeds the subset-dp limit of {SUBSET_DP_MAX_N}"
        )
    counter = [0]

    @lru_cache(maxsize=None)
    def best(mask: int) -> Tuple[float, Tuple[Edge, ...]]:
        counter[0] += 1
        if mask == 0:
            return 0.0, ()
        low = (mask & -mask).bit_length()
        rest = mask & ~(1 << (low - 1))
        value, chosen = best(rest)
        for e in inst.edges_into(low):
            bit = 1 << (e.origin - 1)
            if rest & bit:
                sub_value, sub_chosen = best(rest & ~bit)
                candidate = sub_value + float(e.weight or 0.0)
                if candidate > value:
                    value, chosen = candidate, (e,) + sub_chosen
        return value, chosen

    _, chosen = best((1 << inst.n) - 1)
    return OracleResult(
        math.fsum(float(e.weight or 0.0) for e in chosen),
        _as_witness(list(chosen)),
        SUBSET_DP,
        counter[0],
    )


def opt_edge_weighted(
    inst: Instance, method: str = EXHAUSTIVE, edge_cap: int = DEFAULT_EDGE_CAP
) -> OracleResult:
    """Maximum total edge weight over all matchings."""
    require_valid(inst)
    if inst.weight_mode != EDGE_MODE:
        raise InstanceError("opt_edge_weighted needs an edge-mode instance")
    if method not in METHODS:
        raise ValueError(f"Invalid method '{method}'. Must be one of: {METHODS}")
    if method == AUTO:
        if inst.edge_count <= edge_cap:
            method = EXHAUSTIVE
        elif inst.n <= SUBSET_DP_MAX_N:
            method = SUBSET_DP
        else:
            method = BRANCH_AND_BOUND
    if method == EXHAUSTIVE:
        result = _exhaustive(inst, edge_cap)
    elif method == SUBSET_DP:
        result = _subset_dp(inst)
    else:
        result = _branch_and_bound(inst)
    logger.debug(
        "OPT=%.6g via %s over %d edges (%d nodes)",
        result.weight,
        result.method,
        inst.edge_count,
        result.nodes,
    )
    return result


def vertex_reduction(inst: Instance) -> Instance:
    """Edge-mode copy where edge (j, i) weighs w_j + w_i."""
    return inst.with_edge_weights(
        lambda e: inst.vertex_weight(e.origin) + inst.vertex_weight(e.terminal)
    )


def opt_vertex_weighted(
    inst: Instance, method: str = EXHAUSTIVE, edge_cap: int = DEFAULT_EDGE_CAP
) -> OracleResult:
    """Maximum of sum(w_u + w_v) over all matchings."""
    require_valid(inst)
    if inst.weight_mode != VERTEX_MODE:
        raise InstanceError("opt_vertex_weighted needs a vertex-mode instance")
    return opt_edge_weighted(vertex_reduction(inst), method=method, edge_cap=edge_cap)


def opt(inst: Instance, method: str = EXHAUSTIVE, edge_cap: int = DEFAULT_EDGE_CAP) -> OracleResult:
    """Optimum under the instance's own objective."""
    if inst.weight_mode == VERTEX_MODE:
        return opt_vertex_weighted(inst, method=method, edge_cap=edge_cap)
    return opt_edge_weighted(inst, method=method, edge_cap=edge_cap)


def opt_allocation(inst: Instance, item_cap: int = ALLOCATION_ITEM_CAP) -> float:
    """
    Best total valuation of the auction derived from an edge-mode instance.

    Every item goes to one bidder it has an edge to, or to nobody; a bidder is
    worth its heaviest received edge.
    """
    require_valid(inst)
    if inst.weight_mode != EDGE_MODE:
        raise InstanceError("opt_allocation needs an edge-mode instance")
    items = [v for v in inst.vertices if inst.edges_from(v)]
    if len(items) > item_cap:
        raise OracleCapExceeded(f"{len(items)} items exceed the allocation cap of {item_cap}")

    held: Dict[int, float] = {}
    best = [0.0]

    def assign(k: int) -> None:
        if k == len(items):
            best[0] = max(best[0], math.fsum(held.values()))
            return
        assign(k + 1)
        for e in inst.edges_from(items[k]):
            previous: Optional[float] = held.get(e.terminal)
            held[e.terminal] = max(previous or 0.0, float(e.weight or 0.0))
            assign(k + 1)
            if previous is None:
                del held[e.terminal]
            else:
                held[e.terminal] = previous

    assign(0)
    return best[0]
