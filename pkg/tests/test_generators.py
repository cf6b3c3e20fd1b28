"""
Tests for the instance generators.
"""

import unittest

import numpy as np
import pytest

from ownbm_lab.core.config import GeneratorConfig, WeightSpec
from ownbm_lab.core.generators import (
    gen_adversarial,
    gen_geometric_rides,
    gen_random,
    generate,
    ride_saving,
    shared_route,
    window_pairs,
)
from ownbm_lab.core.model import EDGE_MODE, VERTEX_MODE, validate_instance
from ownbm_lab.utils.instance_io import serialize


def point(x: float, y: float) -> np.ndarray:
    return np.array([x, y], dtype=float)


class TestWindowPairs:
    """Test cases for window_pairs."""

    def test_counts(self):
        """Test pair counts for narrow and full windows."""
        assert window_pairs(4, 1) == [(2, 1), (3, 2), (4, 3)]
        assert len(window_pairs(6, 2)) == 9
        assert len(window_pairs(7, 7)) == 21

    def test_zero_window(self):
        """Test that d = 0 allows no pairs."""
        assert window_pairs(5, 0) == []


class TestGenRandom(unittest.TestCase):
    """Test cases for gen_random."""

    def config(self, **overrides):
        values = dict(n=6, d=1, density=0.5, weights=WeightSpec("uniform", 1, 10), seed=7)
        values.update(overrides)
        return GeneratorConfig(**values)

    def test_density_zero(self):
        """Test that p = 0 gives no edges."""
        self.assertEqual(gen_random(self.config(density=0.0)).edge_count, 0)

    def test_density_one_path(self):
        """Test that p = 1 with d = 1 gives the full path."""
        inst = gen_random(self.config(density=1.0))
        self.assertEqual([e.key for e in inst.edges], window_pairs(6, 1))

    def test_density_one_complete(self):
        """Test that d = n and p = 1 give the complete graph."""
        inst = gen_random(self.config(n=9, d=9, density=1.0))
        self.assertEqual(inst.edge_count, 9 * 8 // 2)

    def test_same_seed_same_instance(self):
        """Test byte-identical output for a repeated seed."""
        first = serialize(gen_random(self.config(seed=11)))
        second = serialize(gen_random(self.config(seed=11)))
        self.assertEqual(first, second)
        self.assertNotEqual(first, serialize(gen_random(self.config(seed=12))))

    def test_weights_in_range(self):
        """Test that drawn weights respect the distribution."""
        inst = gen_random(self.config(n=20, d=4, weights=WeightSpec("int_uniform", 2, 5)))
        for e in inst.edges:
            self.assertIn(e.weight, {2.0, 3.0, 4.0, 5.0})

    def test_vertex_mode(self):
        """Test that vertex mode draws one weight per vertex and none per edge."""
        inst = gen_random(self.config(mode=VERTEX_MODE, density=1.0))
        self.assertEqual(len(inst.vertex_weights), 6)
        self.assertTrue(all(e.weight is None for e in inst.edges))
        self.assertTrue(validate_instance(inst).ok)


class TestSharedRoute:
    """Test cases for shared_route and ride_saving."""

    def test_identical_requests(self):
        """Test that identical requests save one full trip."""
        p, q = point(0.1, 0.2), point(0.4, 0.6)
        total, ride_j, ride_i = shared_route(p, q, p, q)
        assert total == pytest.approx(0.5)
        assert ride_j == pytest.approx(0.5)
        assert ride_i == pytest.approx(0.5)
        assert ride_saving(p, q, p, q) == pytest.approx(0.5)

    def test_opposite_requests_save_nothing(self):
        """Test that riders going opposite ways along a line save nothing."""
        assert ride_saving(point(0, 0), point(1, 0), point(1, 0), point(0, 0)) == pytest.approx(0.0)

    def test_symmetric_in_riders(self):
        """Test that swapping riders keeps the saving."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b, c, d = rng.random((4, 2))
            assert ride_saving(a, b, c, d) == pytest.approx(ride_saving(c, d, a, b))

    def test_saving_bounded_by_shorter_trip(self):
        """Test that sharing never saves more than the shorter solo trip."""
        rng = np.random.default_rng(5)
        for _ in range(20):
            a, b, c, d = rng.random((4, 2))
            shorter = min(np.linalg.norm(b - a), np.linalg.norm(d - c))
            assert ride_saving(a, b, c, d) <= shorter + 1e-12


class TestGeometricRides(unittest.TestCase):
    """Test cases for gen_geometric_rides."""

    def config(self, **overrides):
        values = dict(kind="geometric", n=12, d=4, seed=2)
        values.update(overrides)
        return GeneratorConfig(**values)

    def test_edges_save_distance(self):
        """Test that every edge is a positive saving inside the window."""
        inst = gen_geometric_rides(self.config())
        self.assertTrue(validate_instance(inst).ok)
        for e in inst.edges:
            self.assertGreater(e.weight, 0.0)
            self.assertLessEqual(e.gap, 4)

    def test_rider_detour_limit_removes_edges(self):
        """Test that a tight rider limit keeps a subset of the edges."""
        loose = {e.key for e in gen_geometric_rides(self.config()).edges}
        tight = {e.key for e in gen_geometric_rides(self.config(max_rider_detour=1.0)).edges}
        self.assertTrue(tight <= loose)

    def test_vertex_mode_uses_solo_distance(self):
        """Test that vertex weights are solo trip lengths."""
        inst = gen_geometric_rides(self.config(mode=VERTEX_MODE))
        self.assertEqual(len(inst.vertex_weights), 12)
        self.assertTrue(all(0.0 <= w <= 2 ** 0.5 for w in inst.vertex_weights))
        edge_keys = {e.key for e in gen_geometric_rides(self.config()).edges}
        self.assertEqual({e.key for e in inst.edges}, edge_keys)

    def test_deterministic(self):
        """Test that the same seed reproduces the instance."""
        self.assertEqual(
            serialize(gen_geometric_rides(self.config())),
            serialize(gen_geometric_rides(self.config())),
        )


class TestAdversarial(unittest.TestCase):
    """Test cases for the adversarial catalog."""

    def test_greedy_trap(self):
        """Test the trap's edges."""
        inst = gen_adversarial("greedy-trap", eps=0.01)
        self.assertEqual([e.key for e in inst.edges], [(3, 1), (3, 2), (4, 2)])
        self.assertAlmostEqual(inst.edge_weight(3, 2), 1.01)

    def test_greedy_trap_needs_edge_mode(self):
        """Test that the trap has no vertex-mode form."""
        with self.assertRaises(ValueError):
            gen_adversarial("greedy-trap", mode=VERTEX_MODE)

    def test_path_chain_defaults(self):
        """Test the default path chain."""
        inst = gen_adversarial("path-chain")
        self.assertEqual((inst.n, inst.d, inst.edge_count), (6, 1, 5))

    def test_path_chain_sizes(self):
        """Test an explicit size in vertex mode."""
        inst = gen_adversarial("path-chain", n=9, d=3, mode=VERTEX_MODE)
        self.assertEqual(inst.weight_mode, VERTEX_MODE)
        self.assertEqual(inst.edge_count, 8)

    def test_unknown_name(self):
        """Test that unknown catalog names are rejected."""
        with self.assertRaises(ValueError):
            gen_adversarial("no-such-instance")


class TestGenerate:
    """Test cases for generate."""

    @pytest.mark.parametrize(
        "spec, mode",
        [
            ("random:n=8,d=2,p=0.5", EDGE_MODE),
            ("geometric:n=8,d=3,mode=vertex", VERTEX_MODE),
            ("adversarial:greedy-trap", EDGE_MODE),
            ("adversarial:path-chain:n=5,mode=vertex", VERTEX_MODE),
        ],
    )
    def test_dispatch(self, spec, mode):
        """Test that each kind produces a valid instance of the requested mode."""
        inst = generate(GeneratorConfig.from_spec(spec))
        assert inst.weight_mode == mode
        assert validate_instance(inst).ok
