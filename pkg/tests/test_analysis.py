import math
import random
import statistics

import pytest

from descrawl.analysis import (
    aggregate,
    analyze_tree,
    depth_breadth_table,
    event_type_table,
    level_contributions,
    occurrence_ranking,
    occurrence_series,
    occurrence_table,
    state_range_table,
    stats_from_dict,
    stats_to_dict,
    traversal_table,
)
from descrawl.crawler import SeedClassification, build_tree, classify, tree_to_dict
from descrawl.driver import SimulatedDriver
from descrawl.fixtures import random_fixture
from descrawl.model import states_equivalent

from . import _oracles
from .conftest import make_fixture


def _crawl(fixture):
    classification = classify(fixture.seed, SimulatedDriver(fixture))
    tree = build_tree(fixture.seed, SimulatedDriver(fixture))
    return classification, tree


def test_single_state_tree(driver_for):
    fixture = make_fixture(
        "http://solo.example.com/", {"": (["http://solo.example.com/a.css"], [])}
    )
    _, tree = _crawl(fixture)
    analysis = analyze_tree(tree)
    assert analysis.contributing_paths == ()
    assert analysis.rp_total == tree.root.resources
    assert analysis.descendant_count == 0
    assert analysis.nodes_visited == 1


def test_equivalent_children_do_not_contribute(fig3_fixture):
    _, tree = _crawl(fig3_fixture)
    analysis = analyze_tree(tree)
    # The menu branch contributes at level 1; its children add nothing, so
    # contributing paths stop there and the deep states are all equivalent.
    assert len(analysis.contributing_paths) == 1
    assert analysis.contributing_paths[0].terminal.level == 1
    va = analysis.contributing_paths[0].terminal
    deep = [s for s in tree.nodes.values() if s.level == 2]
    assert len(deep) == 2
    for state in deep:
        assert states_equivalent(va, state)


def test_contributing_paths_cumulative_sets(menus_fixture):
    _, tree = _crawl(menus_fixture)
    analysis = analyze_tree(tree)
    terminals = {p.terminal.script.key(): p for p in analysis.contributing_paths}
    assert set(terminals) == {"menu:mouseover", "menu:mouseover/sub:mouseover"}
    deep = terminals["menu:mouseover/sub:mouseover"]
    assert deep.cumulative == deep.terminal.resources


@pytest.mark.parametrize("seed", [11, 23, 37])
def test_analysis_matches_brute_force_oracle(seed):
    fixture = random_fixture(
        random.Random(seed),
        f"http://oracle-{seed}.example.org/page",
        max_breadth=4,
        max_depth=3,
        overlap=0.5,
        max_states=60,
    )
    _, tree = _crawl(fixture)
    analysis = analyze_tree(tree)
    oracle = _oracles.walk_tree(tree_to_dict(tree))
    assert analysis.rp_total.keys() == frozenset(oracle["rp_total"])
    assert len(analysis.contributing_paths) == len(oracle["contributing"])
    assert {
        level: rs.keys() for level, rs in analysis.per_level_new.items()
    } == {level: frozenset(u) for level, u in oracle["per_level_new"].items()}
    assert analysis.nodes_visited == len(tree.nodes)


def test_aggregate_single_seed_trivial(driver_for):
    fixture = make_fixture(
        "http://solo.example.com/", {"": (["http://solo.example.com/a.css"], [])}
    )
    classification, tree = _crawl(fixture)
    stats = aggregate([(classification, analyze_tree(tree))])
    assert stats.nondeferred.descendants.mean == 0
    assert stats.nondeferred.descendants.median == 0
    assert stats.nondeferred.descendants.stddev == 0
    assert stats.descendants_total == 0


def test_aggregate_requires_nonempty():
    with pytest.raises(ValueError):
        aggregate([])


def test_aggregate_statistics_against_independent_recomputation():
    pairs = []
    per_seed_counts = []
    for seed in range(10):
        fixture = random_fixture(
            random.Random(100 + seed),
            f"http://stat-{seed}.example.org/page",
            max_breadth=3,
            max_depth=2,
        )
        classification, tree = _crawl(fixture)
        pairs.append((classification, analyze_tree(tree)))
        per_seed_counts.append((classification.deferred, tree.descendant_count))
    stats = aggregate(pairs)
    for deferred, stratum in ((True, stats.deferred), (False, stats.nondeferred)):
        values = [c for d, c in per_seed_counts if d == deferred]
        if not values:
            continue
        n = len(values)
        mean = sum(values) / n
        assert math.isclose(stratum.descendants.mean, mean, rel_tol=1e-12)
        if n > 1:
            variance = sum((v - mean) ** 2 for v in values) / (n - 1)
            assert math.isclose(
                stratum.descendants.stddev, math.sqrt(variance), rel_tol=1e-12
            )
        # lower median: element at index (n-1)//2 of the sorted values
        assert stratum.descendants.median == sorted(values)[(n - 1) // 2]
        assert stratum.descendants.min == min(values)
        assert stratum.descendants.max == max(values)


def test_lower_median_convention():
    from descrawl.analysis import Summary

    assert Summary.of([1, 2, 3, 4]).median == 2
    assert Summary.of([5]).median == 5
    assert statistics.median_low([1, 2, 3, 4]) == 2


def test_level_contributions_empty_corpus():
    assert level_contributions([]) == {}


def test_level_contributions_matches_oracle():
    analyses = []
    dumps = []
    for seed in range(8):
        fixture = random_fixture(
            random.Random(500 + seed),
            f"http://lc-{seed}.example.org/page",
            max_breadth=3,
            max_depth=3,
            overlap=0.6,
        )
        _, tree = _crawl(fixture)
        analyses.append(analyze_tree(tree))
        dumps.append(tree_to_dict(tree))
    assert level_contributions(analyses) == _oracles.corpus_level_contributions(dumps)


def test_cross_seed_root_absorption():
    # A URI that is a root resource of one seed and discovered at level 1 of
    # another counts in the level-0 union only; the insertion still counts
    # as an occurrence.
    shared = "http://cdn.example.com/lib.js"
    fx_a = make_fixture("http://a.example.com/", {"": ([shared], [])})
    fx_b = make_fixture(
        "http://b.example.com/",
        {
            "": (["http://b.example.com/base.css"], [("m", "click")]),
            "m:click": ([shared], []),
        },
    )
    pairs = []
    for fx in (fx_a, fx_b):
        classification, tree = _crawl(fx)
        pairs.append((classification, analyze_tree(tree)))
    stats = aggregate(pairs)
    assert stats.level_contributions == {0: 2, 1: 2}
    assert stats.total_new_distinct == 0
    assert stats.occurrences[shared] == 1
    assert stats.contributing_paths_total == 1


def test_occurrence_ranking_all_distinct():
    fixture = make_fixture(
        "http://distinct.example.com/",
        {
            "": (["http://distinct.example.com/base.css"], [("m", "click")]),
            "m:click": (
                ["http://x.example.com/1.js", "http://x.example.com/2.js"],
                [],
            ),
        },
    )
    _, tree = _crawl(fixture)
    ranking = occurrence_ranking([analyze_tree(tree)], 10)
    assert all(count == 1 for _, count in ranking.entries)
    assert ranking.total_insertions == 2


def test_occurrence_ranking_matches_naive_sort_with_planted_duplicates():
    analyses = []
    dumps = []
    for seed in range(6):
        fixture = random_fixture(
            random.Random(900 + seed),
            f"http://occ-{seed}.example.org/page",
            max_breadth=4,
            max_depth=2,
            overlap=0.7,
        )
        _, tree = _crawl(fixture)
        analyses.append(analyze_tree(tree))
        dumps.append(tree_to_dict(tree))
    ranking = occurrence_ranking(analyses, 5)
    oracle = _oracles.ranking(_oracles.corpus_occurrences(dumps), 5)
    assert list(ranking.entries) == oracle


def test_occurrence_ranking_requires_positive_k():
    with pytest.raises(ValueError):
        occurrence_ranking([], 0)


def test_event_share_sums_to_one():
    pairs = []
    for seed in range(12):
        fixture = random_fixture(
            random.Random(50 + seed),
            f"http://share-{seed}.example.org/page",
            max_breadth=4,
            max_depth=2,
        )
        classification, tree = _crawl(fixture)
        pairs.append((classification, analyze_tree(tree)))
    stats = aggregate(pairs)
    if stats.total_new_distinct:
        total = sum(row.pct_new_contribution for row in stats.event_histogram)
        assert abs(total - 1.0) < 1e-9


def test_contribution_cdf_nondecreasing_and_ends_at_one():
    pairs = []
    for seed in range(9):
        fixture = random_fixture(
            random.Random(70 + seed),
            f"http://cdf-{seed}.example.org/page",
            max_breadth=3,
            max_depth=2,
        )
        classification, tree = _crawl(fixture)
        pairs.append((classification, analyze_tree(tree)))
    stats = aggregate(pairs)
    shares = [share for _, share in stats.contribution_cdf]
    if shares:
        assert all(a <= b + 1e-12 for a, b in zip(shares, shares[1:]))
        assert abs(shares[-1] - 1.0) < 1e-9


def test_stats_serialization_round_trip():
    pairs = []
    for seed in range(5):
        fixture = random_fixture(
            random.Random(300 + seed),
            f"http://ser-{seed}.example.org/page",
            max_breadth=3,
            max_depth=2,
        )
        classification, tree = _crawl(fixture)
        pairs.append((classification, analyze_tree(tree)))
    stats = aggregate(pairs)
    back = stats_from_dict(stats_to_dict(stats))
    assert stats_to_dict(back) == stats_to_dict(stats)
    assert back.level_contributions == stats.level_contributions
    assert back.occurrences == stats.occurrences


def test_report_tables_shape():
    fixture = make_fixture(
        "http://tbl.example.com/",
        {
            "": (["http://tbl.example.com/a.css"], [("m", "click")]),
            "m:click": (["http://tbl.example.com/x.js"], []),
        },
    )
    classification, tree = _crawl(fixture)
    stats = aggregate([(classification, analyze_tree(tree))])
    assert {row["metric"] for row in depth_breadth_table(stats)} == {
        "depth",
        "breadth",
        "descendants",
    }
    assert {row["statistic"] for row in state_range_table(stats)} == {
        "min",
        "max",
        "median",
    }
    kinds = [row["kind"] for row in event_type_table(stats)]
    assert kinds[-1] == "other" and "click" in kinds
    summary = traversal_table(stats)
    assert summary["seeds_total"] == 1
    assert summary["contributing_paths"] == 1
    table = occurrence_table(stats, k=3)
    assert table["top_total"] == 1
    series = occurrence_series(stats)
    assert series == [(1, 1)]
