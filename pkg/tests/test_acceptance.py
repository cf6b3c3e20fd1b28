"""
Full-scale checks of the approximation guarantees.

These take minutes and are deselected by default; run them with
`pytest -m slow`. The vertex-weighted check spreads its instances over a
process pool.
"""

import multiprocessing
from collections import Counter
from itertools import cycle
from typing import Any, Dict

import numpy as np
import pytest

from ownbm_lab.core.config import ExperimentConfig, GeneratorConfig, WeightSpec
from ownbm_lab.core.edge_weighted import run_edge_pipeline, valuation
from ownbm_lab.core.generators import gen_random
from ownbm_lab.core.harness import UNDEFINED, run_experiment
from ownbm_lab.core.model import VERTEX_MODE, measure, validate_three_matching
from ownbm_lab.core.oracle import (
    AUTO,
    BRANCH_AND_BOUND,
    EXHAUSTIVE,
    enumerate_matchings,
    opt,
    opt_vertex_weighted,
)
from ownbm_lab.core.vertex_weighted import HALF_WEIGHT_FACTOR, run_vertex_pipeline
from ownbm_lab.utils.instance_io import save_instance
from tests.helpers import instance_a, running_example

pytestmark = pytest.mark.slow

WEIGHTS = WeightSpec("int_uniform", 1, 20)
DENSITIES = (0.3, 0.6, 1.0)
EDGE_INSTANCES = 500
EDGE_TRIALS = 100
ROUNDING_INSTANCES = 20
ROUNDING_SEEDS = 20_000
VERTEX_INSTANCES = 200
VERTEX_TRIALS = 20_000
ORACLE_INSTANCES = 200
SUBMODULAR_SAMPLES = 10_000
WORKED_TRIALS = 10_000


def grid(count: int, mode: str, max_n: int = 12):
    """Generators cycling over sizes, windows and densities."""
    configs = []
    densities = cycle(DENSITIES)
    for k in range(count):
        n = 4 + k % (max_n - 3)
        d = (1, 2, 3, n)[(k // (max_n - 3)) % 4]
        configs.append(
            GeneratorConfig(n=n, d=d, mode=mode, density=next(densities), weights=WEIGHTS, seed=k)
        )
    return configs


def vertex_instance_check(config: GeneratorConfig) -> Dict[str, Any]:
    """All trials of one vertex instance: half-weight stats and per-trial failures."""
    inst = gen_random(config)
    halves = np.empty(VERTEX_TRIALS)
    failures = []
    for trial in range(VERTEX_TRIALS):
        result = run_vertex_pipeline(inst, seed=trial)
        halves[trial] = result.half_weight
        if measure(inst, result.three_matching) < result.half_weight:
            failures.append(f"trial {trial}: 3-matching below half-weight")
        report = validate_three_matching(inst, result.three_matching)
        if not report.ok:
            failures.append(f"trial {trial}: {'; '.join(report.violations)}")
    return {
        "label": config.label,
        "opt": opt(inst, method=AUTO).weight,
        "mean_half": float(halves.mean()),
        "se_half": float(halves.std(ddof=1) / np.sqrt(VERTEX_TRIALS)),
        "failures": failures,
    }


def test_edge_guarantees():
    """Test the half-of-OPT semi-matching and the quarter-of-OPT mean, with no violations."""
    cfg = ExperimentConfig(generators=grid(EDGE_INSTANCES, "edge"), pipeline="edge", trials=EDGE_TRIALS)
    report = run_experiment(cfg)
    assert report.violation_count == 0
    assert report.deadline_violations == 0
    summary = report.summary
    assert len(summary) == EDGE_INSTANCES
    semi_ratios = [r for r in summary["min_semi_ratio"] if r != UNDEFINED]
    assert min(semi_ratios) >= 0.5 - 1e-9
    assert summary["ratio_bound_ok"].all()


def test_rounding_keeps_each_edge_half_the_time():
    """Test the mean matching weight and per-edge inclusion frequencies."""
    for config in grid(ROUNDING_INSTANCES, "edge", max_n=10):
        inst = gen_random(config)
        weights = np.empty(ROUNDING_SEEDS)
        included: Counter = Counter()
        semi = None
        for seed in range(ROUNDING_SEEDS):
            result = run_edge_pipeline(inst, seed=seed)
            semi = result.semi_matching
            weights[seed] = measure(inst, result.matching)
            included.update(result.matching.pairs())
        target = measure(inst, semi) / 2
        se = weights.std(ddof=1) / np.sqrt(ROUNDING_SEEDS)
        assert abs(weights.mean() - target) <= 3 * se + 1e-9
        for pair in semi.pairs():
            assert 0.48 <= included[pair] / ROUNDING_SEEDS <= 0.52


def test_vertex_guarantees():
    """Test the expected half-weight bound and 3-matching dominance on every trial."""
    configs = grid(VERTEX_INSTANCES, VERTEX_MODE)
    with multiprocessing.Pool() as pool:
        results = list(pool.imap(vertex_instance_check, configs, chunksize=1))

    assert [r["label"] for r in results] == [c.label for c in configs]
    failures = [f"{r['label']} {f}" for r in results for f in r["failures"]]
    assert failures == []
    short = [
        r["label"]
        for r in results
        if r["mean_half"] < HALF_WEIGHT_FACTOR * r["opt"] - 3 * r["se_half"] - 1e-9
    ]
    assert short == []


def test_oracle_self_consistency():
    """Test branch-and-bound against enumeration and the vertex reduction against direct sums."""
    for config in grid(ORACLE_INSTANCES, "edge", max_n=10):
        inst = gen_random(config)
        assert opt(inst, method=BRANCH_AND_BOUND).weight == pytest.approx(
            opt(inst, method=EXHAUSTIVE, edge_cap=64).weight
        )
    for config in grid(ORACLE_INSTANCES, VERTEX_MODE, max_n=10):
        inst = gen_random(config)
        direct = max(
            sum(inst.pair_weight(j, i) for j, i in m)
            for m in enumerate_matchings(inst, cap=64)
        )
        assert opt_vertex_weighted(inst, edge_cap=64).weight == pytest.approx(direct)


def test_valuations_are_submodular():
    """Test monotonicity and diminishing returns on seeded (instance, bidder, S, T, item) draws."""
    rng = np.random.default_rng(0)
    catalog = [gen_random(config) for config in grid(100, "edge", max_n=10)]
    violations = []
    for sample in range(SUBMODULAR_SAMPLES):
        inst = catalog[int(rng.integers(len(catalog)))]
        vertices = list(inst.vertices)
        bidder = int(rng.choice(vertices))
        larger = {v for v in vertices if rng.random() < 0.5}
        smaller = {v for v in larger if rng.random() < 0.5}
        outside = [v for v in vertices if v not in larger]

        if valuation(inst, bidder, smaller) > valuation(inst, bidder, larger):
            violations.append(sample)
            continue
        if not outside:
            continue
        item = int(rng.choice(outside))
        gain_small = valuation(inst, bidder, smaller | {item}) - valuation(inst, bidder, smaller)
        gain_large = valuation(inst, bidder, larger | {item}) - valuation(inst, bidder, larger)
        if gain_small < gain_large:
            violations.append(sample)
    assert violations == []


def test_worked_examples_at_scale(tmp_path):
    """Test the running example mean against 6.0 and instance A against the half-weight bound."""
    cfg = ExperimentConfig(trials=WORKED_TRIALS, pipeline="both")
    cfg.add_instance(save_instance(running_example(), tmp_path / "example.json"))
    cfg.add_instance(save_instance(instance_a(), tmp_path / "a.json"))
    report = run_experiment(cfg)
    assert report.violation_count == 0
    summary = report.summary.set_index("instance_id")

    example = summary.loc["example"]
    assert abs(example["mean_final"] - 6.0) <= 3 * example["se_final"]
    assert example["ratio"] > 0.25

    vertex = summary.loc["a/vertex"]
    assert vertex["mean_half"] >= HALF_WEIGHT_FACTOR * 18.0
    assert abs(vertex["origin_share"] - 0.5) <= 0.02
    halves = report.trials.loc[report.trials["instance_id"] == "a/vertex", "half_weight"]
    assert halves.min() >= 8.0
