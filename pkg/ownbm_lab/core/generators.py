"""
Instance generators.

All randomness comes from a numpy Generator seeded with the config's seed, so
equal configs always give equal instances.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from .config import ADVERSARIAL_NAMES, GeneratorConfig
from .model import EDGE_MODE, VERTEX_MODE, Edge, Instance, require_valid

logger = logging.getLogger(__name__)

Point = np.ndarray

GREEDY_TRAP_EPS = 1e-3
PATH_CHAIN_N = 6
PATH_CHAIN_D = 1


def window_pairs(n: int, d: int) -> List[Tuple[int, int]]:
    """Every (j, i) with 0 < j - i <= d, by origin then terminal."""
    return [(j, i) for j in range(2, n + 1) for i in range(max(1, j - d), j)]


def gen_random(config: GeneratorConfig) -> Instance:
    """
    Windowed Erdős–Rényi instance: each in-window pair is an edge with
    probability `density`, independently.
    """
    n, d = int(config.n or 0), int(config.d or 0)
    rng = np.random.default_rng(config.seed)
    vertex_weights: Optional[Tuple[float, ...]] = None
    if config.mode == VERTEX_MODE:
        vertex_weights = tuple(float(w) for w in config.weights.draw(rng, n))

    pairs = window_pairs(n, d)
    keep = rng.random(len(pairs)) < config.density
    chosen = [pair for pair, kept in zip(pairs, keep) if kept]

    if config.mode == EDGE_MODE:
        weights = config.weights.draw(rng, len(chosen))
        edges = tuple(Edge(j, i, float(w)) for (j, i), w in zip(chosen, weights))
    else:
        edges = tuple(Edge(j, i) for j, i in chosen)

    inst = Instance(n, d, config.mode, edges, vertex_weights)
    require_valid(inst)
    logger.info("random instance n=%d d=%d: %d edges", n, d, len(edges))
    return inst


def _length(*stops: Point) -> float:
    return float(sum(np.linalg.norm(b - a) for a, b in zip(stops, stops[1:])))


def shared_route(
    pickup_j: Point, dropoff_j: Point, pickup_i: Point, dropoff_i: Point
) -> Tuple[float, float, float]:
    """
    Shortest pickup-first shared route for two riders.

    Returns the route length and the in-vehicle distance of j and of i. The
    four orders are tried in a fixed sequence and the first shortest one wins.
    """
    orders = [
        ("pj", "pi", "qj", "qi"),
        ("pj", "pi", "qi", "qj"),
        ("pi", "pj", "qj", "qi"),
        ("pi", "pj", "qi", "qj"),
    ]
    points = {"pj": pickup_j, "qj": dropoff_j, "pi": pickup_i, "qi": dropoff_i}
    best: Optional[Tuple[float, float, float]] = None
    for order in orders:
        stops = [points[s] for s in order]
        total = _length(*stops)
        if best is None or total < best[0]:
            ride_j = _length(*stops[order.index("pj") : order.index("qj") + 1])
            ride_i = _length(*stops[order.index("pi") : order.index("qi") + 1])
            best = (total, ride_j, ride_i)
    assert best is not None
    return best


def ride_saving(
    pickup_j: Point, dropoff_j: Point, pickup_i: Point, dropoff_i: Point
) -> float:
    """Distance saved by sharing instead of two solo trips."""
    solo = _length(pickup_j, dropoff_j) + _length(pickup_i, dropoff_i)
    return solo - shared_route(pickup_j, dropoff_j, pickup_i, dropoff_i)[0]


def gen_geometric_rides(config: GeneratorConfig) -> Instance:
    """
    Ride-sharing instance on the unit square.

    Requests j and i in the same window share a ride when sharing saves
    distance, the shared route is at most `detour` times the two solo trips,
    and (if set) no rider travels more than `max_rider_detour` times their
    solo distance. Edge weight is the saving; vertex weight the solo distance.
    """
    n, d = int(config.n or 0), int(config.d or 0)
    rng = np.random.default_rng(config.seed)
    pickups = rng.random((n, 2))
    dropoffs = rng.random((n, 2))
    solo = np.linalg.norm(dropoffs - pickups, axis=1)

    edges: List[Edge] = []
    for j, i in window_pairs(n, d):
        a, b = j - 1, i - 1
        total, ride_j, ride_i = shared_route(pickups[a], dropoffs[a], pickups[b], dropoffs[b])
        both = float(solo[a] + solo[b])
        saving = both - total
        if saving <= 0 or total > config.detour * both:
            continue
        if config.max_rider_detour is not None and (
            ride_j > config.max_rider_detour * solo[a]
            or ride_i > config.max_rider_detour * solo[b]
        ):
            continue
        edges.append(Edge(j, i, saving if config.mode == EDGE_MODE else None))

    vertex_weights = (
        tuple(float(s) for s in solo) if config.mode == VERTEX_MODE else None
    )
    inst = Instance(n, d, config.mode, tuple(edges), vertex_weights)
    require_valid(inst)
    logger.info("geometric instance n=%d d=%d: %d shareable pairs", n, d, len(edges))
    return inst


def _greedy_trap(eps: float) -> Instance:
    # Greedy gives item 3 to bidder 2 for 1 + eps, then item 4 has nothing
    # left to add; the optimum takes (3,1) and (4,2) for 2.
    return Instance(
        n=4,
        d=2,
        weight_mode=EDGE_MODE,
        edges=(Edge(3, 1, 1.0), Edge(3, 2, 1.0 + eps), Edge(4, 2, 1.0)),
    )


def _path_chain(n: int, d: int, mode: str) -> Instance:
    if mode == VERTEX_MODE:
        return Instance(
            n, d, VERTEX_MODE, tuple(Edge(k + 1, k) for k in range(1, n)), (1.0,) * n
        )
    return Instance(n, d, EDGE_MODE, tuple(Edge(k + 1, k, 1.0) for k in range(1, n)))


def gen_adversarial(
    name: str,
    n: Optional[int] = None,
    d: Optional[int] = None,
    eps: float = GREEDY_TRAP_EPS,
    mode: str = EDGE_MODE,
) -> Instance:
    """Hand-built instance from the adversarial catalog."""
    if name not in ADVERSARIAL_NAMES:
        raise ValueError(f"Unknown adversarial instance '{name}'. Valid names: {ADVERSARIAL_NAMES}")
    if name == "greedy-trap":
        if mode != EDGE_MODE:
            raise ValueError("greedy-trap is an edge-mode instance")
        if eps <= 0 or math.isinf(eps):
            raise ValueError("eps must be positive and finite")
        inst = _greedy_trap(eps)
    else:
        inst = _path_chain(n or PATH_CHAIN_N, PATH_CHAIN_D if d is None else d, mode)
    require_valid(inst)
    return inst


def generate(config: GeneratorConfig) -> Instance:
    """Build the instance a generator config describes."""
    if config.is_adversarial:
        return gen_adversarial(
            config.adversarial_name, n=config.n, d=config.d, eps=config.eps, mode=config.mode
        )
    if config.kind == "geometric":
        return gen_geometric_rides(config)
    return gen_random(config)
