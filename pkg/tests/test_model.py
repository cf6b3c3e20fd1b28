"""
Tests for the instance model, validators and measures.
"""

import logging
import unittest

import pytest

from ownbm_lab.core.model import (
    CREATE_PAIR,
    DELETE_EDGE_AND_REPAIR,
    EDGE_MODE,
    VERTEX_MODE,
    Edge,
    Instance,
    InstanceError,
    InvariantError,
    Matching,
    MeasureError,
    PickedEdge,
    RunEvent,
    SemiMatching,
    SemiMatchingBuilder,
    ThreeMatchEvent,
    ThreeMatching,
    audit_deadlines,
    measure,
    stream,
    validate_instance,
    validate_matching,
    validate_semi_matching,
    validate_three_matching,
)
from tests.helpers import edgeless, instance_a, running_example


class TestValidateInstance(unittest.TestCase):
    """Test cases for validate_instance."""

    def test_worked_instances_are_valid(self):
        """Test that both worked instances pass."""
        self.assertTrue(validate_instance(running_example()).ok)
        self.assertTrue(validate_instance(instance_a()).ok)

    def test_window_violation_names_edge(self):
        """Test that an edge spanning more than d steps is reported."""
        inst = Instance(n=3, d=1, edges=(Edge(3, 1, 1.0),))
        report = validate_instance(inst)
        self.assertFalse(report.ok)
        self.assertIn("edge (3,1): window: gap 2 > d=1", report.violations)

    def test_reversed_edge(self):
        """Test that an edge pointing forward in time is rejected."""
        report = validate_instance(Instance(n=3, d=2, edges=(Edge(1, 2, 1.0),)))
        self.assertIn("edge (1,2): origin must exceed terminal", report.violations)

    def test_duplicate_edge(self):
        """Test that repeated edges are rejected."""
        inst = Instance(n=2, d=1, edges=(Edge(2, 1, 1.0), Edge(2, 1, 2.0)))
        self.assertIn("edge (2,1): duplicate edge", validate_instance(inst).violations)

    def test_out_of_range_vertex(self):
        """Test that endpoints beyond n are rejected."""
        report = validate_instance(Instance(n=2, d=3, edges=(Edge(4, 2, 1.0),)))
        self.assertTrue(any("out of range" in v for v in report.violations))

    def test_negative_and_missing_weights(self):
        """Test that edge mode requires finite non-negative weights."""
        report = validate_instance(
            Instance(n=3, d=2, edges=(Edge(2, 1, -1.0), Edge(3, 2, None)))
        )
        self.assertEqual(len(report.violations), 2)

    def test_vertex_mode_requires_weights(self):
        """Test that vertex mode needs one weight per vertex."""
        missing = Instance(n=2, d=1, weight_mode=VERTEX_MODE, edges=(Edge(2, 1),))
        short = Instance(
            n=2, d=1, weight_mode=VERTEX_MODE, edges=(Edge(2, 1),), vertex_weights=(1.0,)
        )
        self.assertIn("vertex mode requires vertex_weights", validate_instance(missing).violations)
        self.assertFalse(validate_instance(short).ok)

    def test_vertex_weights_in_edge_mode(self):
        """Test that edge mode rejects vertex weights."""
        inst = Instance(n=1, d=0, vertex_weights=(1.0,))
        self.assertIn("vertex_weights present in edge mode", validate_instance(inst).violations)

    def test_bad_header(self):
        """Test that n, d and mode are checked first."""
        report = validate_instance(Instance(n=0, d=-1, weight_mode="both"))
        self.assertEqual(len(report.violations), 3)

    def test_lists_are_frozen(self):
        """Test that edges given as tuples become Edge objects."""
        inst = Instance(n=2, d=1, edges=[(2, 1, 3.0)])
        self.assertEqual(inst.edges, (Edge(2, 1, 3.0),))
        self.assertEqual(inst.edge_weight(2, 1), 3.0)


class TestInstanceLookups:
    """Test cases for Instance helpers."""

    def test_adjacency_orders(self):
        """Test that out-edges sort by terminal and in-edges by origin."""
        inst = running_example()
        assert [e.terminal for e in inst.edges_from(3)] == [1, 2]
        assert [e.origin for e in inst.edges_into(2)] == [3, 4]
        assert inst.edges_from(1) == []

    def test_edge_weight_errors(self):
        """Test lookups of missing edges and wrong-mode weights."""
        with pytest.raises(KeyError):
            running_example().edge_weight(4, 1)
        with pytest.raises(MeasureError):
            instance_a().edge_weight(2, 1)
        with pytest.raises(MeasureError):
            running_example().vertex_weight(1)

    def test_pair_weight_in_vertex_mode(self):
        """Test that a vertex-mode edge is worth both endpoint weights."""
        assert instance_a().pair_weight(3, 1) == 18.0

    def test_with_edge_weights(self):
        """Test building an edge-mode copy."""
        inst = instance_a()
        copy = inst.with_edge_weights(lambda e: float(e.gap))
        assert copy.weight_mode == EDGE_MODE
        assert copy.vertex_weights is None
        assert copy.edge_weight(3, 1) == 2.0


class TestStream:
    """Test cases for stream."""

    def test_reveals_out_edges_in_order(self):
        """Test that each arrival reveals exactly its out-edges."""
        events = list(stream(running_example()))
        assert [e.time for e in events] == [1, 2, 3, 4]
        assert events[0].revealed_edges == ()
        assert [e.key for e in events[3].revealed_edges] == [(4, 2), (4, 3)]

    def test_vertex_weights_revealed(self):
        """Test that vertex-mode arrivals carry their weight."""
        assert [e.vertex_weight for e in stream(instance_a())] == [10.0, 6.0, 8.0]

    def test_invalid_instance_fails_eagerly(self):
        """Test that stream rejects invalid instances before iteration."""
        with pytest.raises(InstanceError):
            stream(Instance(n=3, d=1, edges=(Edge(3, 1, 1.0),)))

    def test_rejection_is_logged(self, caplog):
        """Test that a rejected instance leaves a warning naming its header."""
        with caplog.at_level(logging.WARNING, logger="ownbm_lab.core.model"):
            with pytest.raises(InstanceError):
                stream(Instance(n=3, d=1, edges=(Edge(3, 1, 1.0),)))
        assert "Rejected instance n=3 d=1" in caplog.text

    def test_empty_instance(self):
        """Test a one-vertex instance."""
        events = list(stream(Instance(n=1, d=0)))
        assert len(events) == 1 and events[0].revealed_edges == ()


class TestStructureValidators(unittest.TestCase):
    """Test cases for semi-matching, matching and 3-matching validators."""

    def setUp(self):
        self.inst = running_example()

    def test_semi_matching_path(self):
        """Test that a path is a valid semi-matching."""
        sm = SemiMatching(((2, 1, 3), (3, 2, 4), (4, 3, 4)))
        self.assertTrue(validate_semi_matching(self.inst, sm).ok)

    def test_semi_matching_two_out_edges(self):
        """Test that a vertex may originate only one edge."""
        sm = SemiMatching(((3, 1, 3), (3, 2, 4)))
        self.assertIn("vertex 3 originates 2 edges", validate_semi_matching(self.inst, sm).violations)

    def test_late_pick(self):
        """Test the deadline check on a picked edge."""
        report = validate_semi_matching(self.inst, SemiMatching(((2, 1, 4),)))
        self.assertTrue(any("after deadline 3" in v for v in report.violations))

    def test_pick_before_reveal(self):
        """Test that an edge cannot be picked before its origin arrives."""
        report = validate_semi_matching(self.inst, SemiMatching(((3, 1, 2),)))
        self.assertTrue(any("before the edge was revealed" in v for v in report.violations))

    def test_matching_shared_vertex(self):
        """Test that a path is not a matching."""
        report = validate_matching(self.inst, Matching(((2, 1, 3), (3, 2, 4))))
        self.assertIn("vertex 2 incident twice", report.violations)

    def test_matching_unknown_edge(self):
        """Test that a matching may only use instance edges."""
        report = validate_matching(self.inst, Matching(((4, 1, 4),)))
        self.assertFalse(report.ok)

    def test_three_matching_rules(self):
        """Test set sizes, 2-set edges and induced edges of 3-sets."""
        inst = Instance(
            n=4,
            d=3,
            edges=(Edge(2, 1, 1.0), Edge(3, 2, 1.0), Edge(4, 3, 1.0)),
        )
        good = ThreeMatching(sets=({3, 2, 1},))
        thin = ThreeMatching(sets=({4, 3, 1},))
        not_edge = ThreeMatching(sets=({3, 1},))
        overlap = ThreeMatching(sets=({2, 1}, {3, 2}))
        self.assertTrue(validate_three_matching(inst, good).ok)
        self.assertIn(
            "3-set {4,3,1} needs ≥2 induced edges, found 1",
            validate_three_matching(inst, thin).violations,
        )
        self.assertIn("2-set {3,1} is not an edge", validate_three_matching(inst, not_edge).violations)
        self.assertIn("vertex 2 in more than one set", validate_three_matching(inst, overlap).violations)

    def test_three_matching_event_deadlines(self):
        """Test that 3-matching events respect their deadlines."""
        inst = Instance(n=3, d=1, edges=(Edge(2, 1, 1.0), Edge(3, 2, 1.0)))
        late = ThreeMatching(
            sets=({2, 1},),
            event_log=(
                ThreeMatchEvent(3, CREATE_PAIR, (2, 1), 0),
                ThreeMatchEvent(5, DELETE_EDGE_AND_REPAIR, (3, 2), 0),
            ),
        )
        report = validate_three_matching(inst, late)
        self.assertEqual(len(report.violations), 2)


class TestAuditAndMeasure:
    """Test cases for audit_deadlines and measure."""

    def test_audit_flags_late_events(self):
        """Test that picks past terminal + d and deletions past origin + d are flagged."""
        inst = running_example()
        events = [
            RunEvent(3, "finalize", {"origin": 2, "terminal": 1, "weight": 5.0}),
            RunEvent(4, "emit", {"origin": 2, "terminal": 1}),
            RunEvent(6, DELETE_EDGE_AND_REPAIR, {"origin": 3, "terminal": 2, "set": 0}),
            RunEvent(9, "color", {"vertex": 1, "color": "green", "forced": False}),
        ]
        report = audit_deadlines(inst, events)
        assert len(report.violations) == 2

    def test_measure_edge_mode(self):
        """Test semi-matching weight of the running example."""
        sm = SemiMatching(((2, 1, 3), (3, 2, 4), (4, 3, 4)))
        assert measure(running_example(), sm) == 12.0

    def test_measure_vertex_mode(self):
        """Test that vertex mode sums both endpoints per edge and all 3-set members."""
        inst = instance_a()
        assert measure(inst, Matching(((3, 1, 3),))) == 18.0
        assert measure(inst, ThreeMatching(sets=({3, 2, 1},))) == 24.0

    def test_measure_is_additive(self):
        """Test that disjoint structures weigh the sum of their parts."""
        inst = running_example()
        left, right = Matching(((2, 1, 3),)), Matching(((4, 3, 4),))
        both = Matching(((2, 1, 3), (4, 3, 4)))
        assert measure(inst, both) == measure(inst, left) + measure(inst, right) == 8.0
        semi = SemiMatching(((2, 1, 3), (3, 2, 4), (4, 3, 4)))
        parts = [SemiMatching((entry,)) for entry in semi.entries]
        assert measure(inst, semi) == sum(measure(inst, p) for p in parts)

        chain = Instance(
            n=4,
            d=2,
            weight_mode=VERTEX_MODE,
            edges=(Edge(2, 1), Edge(3, 2), Edge(4, 2), Edge(4, 3)),
            vertex_weights=(1.0, 2.0, 3.0, 4.0),
        )
        first, second = ThreeMatching(sets=({2, 1},)), ThreeMatching(sets=({4, 3},))
        whole = ThreeMatching(sets=({2, 1}, {4, 3}))
        assert measure(chain, whole) == measure(chain, first) + measure(chain, second) == 10.0

    def test_measure_three_matching_needs_vertex_mode(self):
        """Test that 3-matchings have no edge-mode weight."""
        with pytest.raises(MeasureError):
            measure(running_example(), ThreeMatching(sets=({2, 1},)))

    def test_measure_empty(self):
        """Test that empty structures weigh 0."""
        assert measure(edgeless(), Matching()) == 0.0


class TestSemiMatchingBuilder:
    """Test cases for SemiMatchingBuilder."""

    def test_rejects_second_in_edge(self):
        """Test that a vertex cannot terminate two edges."""
        builder = SemiMatchingBuilder()
        builder.add(PickedEdge(2, 1, 3))
        with pytest.raises(InvariantError):
            builder.add(PickedEdge(3, 1, 3))
        assert builder.freeze().pairs() == [(2, 1)]
