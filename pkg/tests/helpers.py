"""
Shared instances, a scripted coin source and hypothesis strategies.
"""

from typing import Iterable, List

from hypothesis import strategies as st

from ownbm_lab.core.generators import window_pairs
from ownbm_lab.core.model import EDGE_MODE, VERTEX_MODE, Edge, Instance


def running_example() -> Instance:
    """n=4, d=2: semi-matching {(2,1),(3,2),(4,3)} of weight 12, OPT 13."""
    return Instance(
        n=4,
        d=2,
        weight_mode=EDGE_MODE,
        edges=(
            Edge(2, 1, 5.0),
            Edge(3, 1, 7.0),
            Edge(3, 2, 4.0),
            Edge(4, 2, 6.0),
            Edge(4, 3, 3.0),
        ),
    )


def instance_a() -> Instance:
    """n=3, d=2, w=[10,6,8], a triangle. OPT 18 via (3,1)."""
    return Instance(
        n=3,
        d=2,
        weight_mode=VERTEX_MODE,
        edges=(Edge(2, 1), Edge(3, 1), Edge(3, 2)),
        vertex_weights=(10.0, 6.0, 8.0),
    )


def edgeless(n: int = 3, mode: str = EDGE_MODE) -> Instance:
    weights = (1.0,) * n if mode == VERTEX_MODE else None
    return Instance(n=n, d=1, weight_mode=mode, vertex_weights=weights)


class ScriptedRng:
    """Stands in for a numpy Generator; returns the scripted values in order."""

    def __init__(self, values: Iterable[float], fill: float = 0.0) -> None:
        self.values: List[float] = list(values)
        self.fill = fill
        self.calls = 0

    def random(self) -> float:
        self.calls += 1
        if self.values:
            return self.values.pop(0)
        return self.fill


@st.composite
def instances(draw, mode: str = EDGE_MODE, max_n: int = 8, max_weight: int = 20):
    """Random valid instances with integer-valued weights."""
    n = draw(st.integers(min_value=1, max_value=max_n))
    d = draw(st.integers(min_value=0, max_value=n))
    pairs = window_pairs(n, d)
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    chosen = [pair for pair, kept in zip(pairs, mask) if kept]
    weight = st.integers(min_value=0, max_value=max_weight).map(float)
    if mode == VERTEX_MODE:
        vertex_weights = tuple(draw(st.lists(weight, min_size=n, max_size=n)))
        return Instance(n, d, VERTEX_MODE, tuple(Edge(j, i) for j, i in chosen), vertex_weights)
    return Instance(
        n, d, EDGE_MODE, tuple(Edge(j, i, draw(weight)) for j, i in chosen)
    )
