"""Traversal analysis of state trees and corpus-level aggregation.

For one tree: walk every state once, compute the resources each state adds
over its parent (its new-resource set), collect the contributing paths
(paths whose terminal state added at least one new resource), and the
cumulative resource frontier. For a corpus: aggregate per-stratum
statistics, the global deduplicated frontier per level, per-event-kind
contributions, occurrence counts and contribution CDFs.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .crawler import SeedClassification
from .model import (
    KNOWN_EVENT_KINDS,
    OTHER_KIND,
    ResourceRef,
    ResourceSet,
    StatePath,
    StateTree,
)

_KIND_ORDER = (
    "click",
    "mouseover",
    "mousedown",
    "blur",
    "change",
    "mouseout",
    "submit",
    "unload",
    "keydown",
    "focus",
    "keypress",
    "focusout",
    "dblclick",
    "mouseup",
    OTHER_KIND,
)


@dataclass(frozen=True)
class Discovery:
    """One frontier insertion: a resource first seen on some node's path."""

    canonical: str
    level: int
    kind_bucket: str


@dataclass(frozen=True)
class PathAnalysis:
    """Everything the corpus aggregation needs from one tree."""

    seed: str
    contributing_paths: tuple[StatePath, ...]
    per_level_new: Mapping[int, ResourceSet]
    rp_total: ResourceSet
    descendant_count: int
    root_resources: ResourceSet
    insertions: tuple[Discovery, ...]
    max_level: int
    root_breadth: int
    kinds_present: frozenset[str]
    nodes_visited: int


def analyze_tree(tree: StateTree) -> PathAnalysis:
    """Walk a tree once and compute its path/frontier analysis."""
    root = tree.root
    rp_total = root.resources
    per_level_new: dict[int, ResourceSet] = {}
    contributing: list[StatePath] = []
    insertions: list[Discovery] = []
    kinds: set[str] = {e.kind.bucket for e in root.available_events}
    visited = 0

    for node_id, state in tree.nodes.items():
        visited += 1
        if node_id == tree.root_id:
            continue
        kinds.update(e.kind.bucket for e in state.available_events)
        parent = tree.parent_of(node_id)
        added = state.resources.difference(parent.resources)
        rp_total = rp_total.union(state.resources)
        if not added:
            continue
        bucket = state.script.events[-1].kind.bucket
        level = state.level
        existing = per_level_new.get(level)
        per_level_new[level] = added if existing is None else existing.union(added)
        contributing.append(tree.path(node_id))
        insertions.extend(
            Discovery(canonical=ref.canonical, level=level, kind_bucket=bucket)
            for ref in added
        )

    return PathAnalysis(
        seed=tree.seed.canonical,
        contributing_paths=tuple(contributing),
        per_level_new=per_level_new,
        rp_total=rp_total,
        descendant_count=tree.descendant_count,
        root_resources=root.resources,
        insertions=tuple(insertions),
        max_level=tree.max_level,
        root_breadth=len(root.available_events),
        kinds_present=frozenset(kinds),
        nodes_visited=visited,
    )


@dataclass(frozen=True)
class Summary:
    """mean / sample standard deviation / lower median / min / max."""

    mean: float
    stddev: float
    median: float
    min: float
    max: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "Summary":
        if not values:
            return cls(0.0, 0.0, 0.0, 0.0, 0.0)
        return cls(
            mean=statistics.mean(values),
            stddev=statistics.stdev(values) if len(values) > 1 else 0.0,
            median=float(statistics.median_low(values)),
            min=float(min(values)),
            max=float(max(values)),
        )


@dataclass(frozen=True)
class StratumStats:
    seeds: int
    descendants_total: int
    contributing_paths: int
    descendants: Summary
    depth: Summary
    breadth: Summary


@dataclass(frozen=True)
class EventTypeRow:
    kind: str
    pct_deferred_seeds: float
    pct_nondeferred_seeds: float
    pct_new_contribution: float


@dataclass(frozen=True)
class CorpusStats:
    """Corpus-wide aggregates over (classification, analysis) pairs."""

    deferred: StratumStats
    nondeferred: StratumStats
    descendants_total: int
    contributing_paths_total: int
    level_contributions: Mapping[int, int]
    corpus_frontier: Mapping[int, ResourceSet]
    occurrences: Mapping[str, int]
    total_insertions: int
    total_new_distinct: int
    new_by_kind: Mapping[str, int]
    event_histogram: tuple[EventTypeRow, ...]
    contribution_cdf: tuple[tuple[int, float], ...]
    max_depth: int

    @property
    def seeds_total(self) -> int:
        return self.deferred.seeds + self.nondeferred.seeds


def _stratum(
    pairs: Sequence[tuple[SeedClassification, PathAnalysis]]
) -> StratumStats:
    descendants = [a.descendant_count for _, a in pairs]
    depths = [a.max_level for _, a in pairs]
    breadths = [a.root_breadth for _, a in pairs]
    return StratumStats(
        seeds=len(pairs),
        descendants_total=sum(descendants),
        contributing_paths=sum(len(a.contributing_paths) for _, a in pairs),
        descendants=Summary.of(descendants),
        depth=Summary.of(depths),
        breadth=Summary.of(breadths),
    )


def aggregate(
    pairs: Sequence[tuple[SeedClassification, PathAnalysis]]
) -> CorpusStats:
    """Fold per-seed analyses into corpus statistics.

    Frontier deduplication is global: the level-0 union is assembled first,
    then insertions are scanned in seed order so each globally new resource
    is attributed to the event kind that first discovered it.
    """
    if not pairs:
        raise ValueError("aggregate() needs at least one analyzed seed")

    deferred_pairs = [p for p in pairs if p[0].deferred]
    nondeferred_pairs = [p for p in pairs if not p[0].deferred]

    roots = ResourceSet()
    for _, analysis in pairs:
        roots = roots.union(analysis.root_resources)

    # Occurrences count every insertion; the global frontier assigns each
    # new URI the minimum level it was discovered at anywhere (set-union
    # semantics), while event-kind attribution follows the first discovery
    # in crawl order.
    occurrences: Counter[str] = Counter()
    first_kind: dict[str, str] = {}
    min_level: dict[str, int] = {}
    ref_for: dict[str, ResourceRef] = {}

    for _, analysis in pairs:
        for disc in analysis.insertions:
            occurrences[disc.canonical] += 1
            if disc.canonical in roots:
                continue
            if disc.canonical not in first_kind:
                first_kind[disc.canonical] = disc.kind_bucket
            previous = min_level.get(disc.canonical)
            if previous is None or disc.level < previous:
                min_level[disc.canonical] = disc.level
                ref_for[disc.canonical] = analysis.per_level_new[disc.level].get(
                    disc.canonical
                )

    new_by_kind = Counter(first_kind.values())
    globally_new = set(min_level)
    new_refs_by_level: dict[int, dict[str, ResourceRef]] = {}
    for canonical, level in min_level.items():
        new_refs_by_level.setdefault(level, {})[canonical] = ref_for[canonical]

    frontier: dict[int, ResourceSet] = {0: roots}
    max_depth_seen = max(a.max_level for _, a in pairs)
    for level in range(1, max_depth_seen + 1):
        frontier[level] = ResourceSet(new_refs_by_level.get(level, {}).values())

    level_contributions: dict[int, int] = {}
    running = 0
    for level in range(0, max_depth_seen + 1):
        running += len(frontier[level])
        level_contributions[level] = running

    total_new = len(globally_new)
    kinds_deferred = Counter()
    kinds_nondeferred = Counter()
    for classification, analysis in pairs:
        counter = kinds_deferred if classification.deferred else kinds_nondeferred
        for kind in analysis.kinds_present:
            counter[kind] += 1

    histogram = []
    for kind in _KIND_ORDER:
        histogram.append(
            EventTypeRow(
                kind=kind,
                pct_deferred_seeds=(
                    kinds_deferred[kind] / len(deferred_pairs)
                    if deferred_pairs
                    else 0.0
                ),
                pct_nondeferred_seeds=(
                    kinds_nondeferred[kind] / len(nondeferred_pairs)
                    if nondeferred_pairs
                    else 0.0
                ),
                pct_new_contribution=(
                    new_by_kind[kind] / total_new if total_new else 0.0
                ),
            )
        )

    per_seed_new = sorted(
        (len(a.rp_total) - len(a.root_resources) for _, a in pairs), reverse=True
    )
    cdf: list[tuple[int, float]] = []
    total_contribution = sum(per_seed_new)
    if total_contribution:
        acc = 0
        for rank, value in enumerate(per_seed_new, start=1):
            acc += value
            cdf.append((rank, acc / total_contribution))

    return CorpusStats(
        deferred=_stratum(deferred_pairs),
        nondeferred=_stratum(nondeferred_pairs),
        descendants_total=sum(a.descendant_count for _, a in pairs),
        contributing_paths_total=sum(len(a.contributing_paths) for _, a in pairs),
        level_contributions=level_contributions,
        corpus_frontier=frontier,
        occurrences=dict(occurrences),
        total_insertions=sum(occurrences.values()),
        total_new_distinct=total_new,
        new_by_kind=dict(new_by_kind),
        event_histogram=tuple(histogram),
        contribution_cdf=tuple(cdf),
        max_depth=max_depth_seen,
    )


def level_contributions(
    analyses: Iterable[PathAnalysis],
) -> dict[int, int]:
    """Cumulative deduplicated frontier size per level across a corpus.

    Returns an empty map for an empty corpus.
    """
    analyses = list(analyses)
    if not analyses:
        return {}
    roots = ResourceSet()
    for analysis in analyses:
        roots = roots.union(analysis.root_resources)
    min_level: dict[str, int] = {}
    for analysis in analyses:
        for disc in analysis.insertions:
            if disc.canonical in roots:
                continue
            previous = min_level.get(disc.canonical)
            if previous is None or disc.level < previous:
                min_level[disc.canonical] = disc.level
    new_at = Counter(min_level.values())
    out: dict[int, int] = {}
    running = len(roots)
    max_level = max(a.max_level for a in analyses)
    for level in range(0, max_level + 1):
        if level:
            running += new_at[level]
        out[level] = running
    return out


@dataclass(frozen=True)
class OccurrenceRanking:
    entries: tuple[tuple[str, int], ...]
    top_total: int
    share_of_new: float
    total_new_distinct: int
    total_insertions: int


def occurrence_ranking(
    analyses: Iterable[PathAnalysis], k: int
) -> OccurrenceRanking:
    """Rank canonical URIs by frontier-insertion count, descending, ties
    broken lexicographically.

    ``share_of_new`` relates the top-k occurrence total to the number of
    distinct new resources the corpus discovered beyond its roots.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    analyses = list(analyses)
    roots = ResourceSet()
    for analysis in analyses:
        roots = roots.union(analysis.root_resources)
    counts: Counter[str] = Counter()
    distinct_new: set[str] = set()
    for analysis in analyses:
        for disc in analysis.insertions:
            counts[disc.canonical] += 1
            if disc.canonical not in roots:
                distinct_new.add(disc.canonical)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))[:k]
    top_total = sum(count for _, count in ranked)
    total_new = len(distinct_new)
    return OccurrenceRanking(
        entries=tuple(ranked),
        top_total=top_total,
        share_of_new=(top_total / total_new) if total_new else 0.0,
        total_new_distinct=total_new,
        total_insertions=sum(counts.values()),
    )


# -- report tables ------------------------------------------------------------


def depth_breadth_table(stats: CorpusStats) -> list[dict]:
    """Average/stddev of depth, breadth and descendants per stratum."""
    rows = []
    for metric in ("depth", "breadth", "descendants"):
        rows.append(
            {
                "metric": metric,
                "deferred_avg": getattr(stats.deferred, metric).mean,
                "deferred_s": getattr(stats.deferred, metric).stddev,
                "nondeferred_avg": getattr(stats.nondeferred, metric).mean,
                "nondeferred_s": getattr(stats.nondeferred, metric).stddev,
            }
        )
    return rows


def state_range_table(stats: CorpusStats) -> list[dict]:
    """Min/max/median descendant counts per stratum."""
    return [
        {
            "statistic": name,
            "deferred": getattr(stats.deferred.descendants, attr),
            "nondeferred": getattr(stats.nondeferred.descendants, attr),
        }
        for name, attr in (("min", "min"), ("max", "max"), ("median", "median"))
    ]


def event_type_table(stats: CorpusStats) -> list[dict]:
    return [
        {
            "kind": row.kind,
            "pct_deferred_seeds": row.pct_deferred_seeds,
            "pct_nondeferred_seeds": row.pct_nondeferred_seeds,
            "pct_new_contribution": row.pct_new_contribution,
        }
        for row in stats.event_histogram
    ]


def traversal_table(stats: CorpusStats) -> dict:
    return {
        "seeds_total": stats.seeds_total,
        "seeds_deferred": stats.deferred.seeds,
        "seeds_nondeferred": stats.nondeferred.seeds,
        "descendants_total": stats.descendants_total,
        "descendants_deferred": stats.deferred.descendants_total,
        "descendants_nondeferred": stats.nondeferred.descendants_total,
        "contributing_paths": stats.contributing_paths_total,
        "level_contributions": dict(stats.level_contributions),
        "total_new_distinct": stats.total_new_distinct,
        "total_insertions": stats.total_insertions,
        "max_depth": stats.max_depth,
    }


def occurrence_table(stats: CorpusStats, k: int = 10) -> dict:
    ranked = sorted(stats.occurrences.items(), key=lambda item: (-item[1], item[0]))
    top = ranked[:k]
    top_total = sum(count for _, count in top)
    return {
        "entries": [{"uri": uri, "occurrences": count} for uri, count in top],
        "top_total": top_total,
        "share_of_new": (
            top_total / stats.total_new_distinct if stats.total_new_distinct else 0.0
        ),
    }


def occurrence_series(stats: CorpusStats, top: int = 300) -> list[tuple[int, int]]:
    ranked = sorted(stats.occurrences.items(), key=lambda item: (-item[1], item[0]))
    return [(rank, count) for rank, (_, count) in enumerate(ranked[:top], start=1)]


# -- serialization ------------------------------------------------------------


def _summary_to_dict(summary: Summary) -> dict:
    return {
        "mean": summary.mean,
        "stddev": summary.stddev,
        "median": summary.median,
        "min": summary.min,
        "max": summary.max,
    }


def _stratum_to_dict(stratum: StratumStats) -> dict:
    return {
        "seeds": stratum.seeds,
        "descendants_total": stratum.descendants_total,
        "contributing_paths": stratum.contributing_paths,
        "descendants": _summary_to_dict(stratum.descendants),
        "depth": _summary_to_dict(stratum.depth),
        "breadth": _summary_to_dict(stratum.breadth),
    }


def _stratum_from_dict(data: dict) -> StratumStats:
    return StratumStats(
        seeds=data["seeds"],
        descendants_total=data["descendants_total"],
        contributing_paths=data["contributing_paths"],
        descendants=Summary(**data["descendants"]),
        depth=Summary(**data["depth"]),
        breadth=Summary(**data["breadth"]),
    )


def stats_to_dict(stats: CorpusStats) -> dict:
    from .crawler import resource_to_dict

    return {
        "deferred": _stratum_to_dict(stats.deferred),
        "nondeferred": _stratum_to_dict(stats.nondeferred),
        "descendants_total": stats.descendants_total,
        "contributing_paths_total": stats.contributing_paths_total,
        "level_contributions": {
            str(k): v for k, v in stats.level_contributions.items()
        },
        "corpus_frontier": {
            str(level): [resource_to_dict(ref) for ref in refs]
            for level, refs in stats.corpus_frontier.items()
        },
        "occurrences": dict(stats.occurrences),
        "total_insertions": stats.total_insertions,
        "total_new_distinct": stats.total_new_distinct,
        "new_by_kind": dict(stats.new_by_kind),
        "event_histogram": event_type_table(stats),
        "contribution_cdf": [list(pair) for pair in stats.contribution_cdf],
        "max_depth": stats.max_depth,
    }


def stats_from_dict(data: dict) -> CorpusStats:
    from .crawler import resource_from_dict

    return CorpusStats(
        deferred=_stratum_from_dict(data["deferred"]),
        nondeferred=_stratum_from_dict(data["nondeferred"]),
        descendants_total=data["descendants_total"],
        contributing_paths_total=data["contributing_paths_total"],
        level_contributions={
            int(k): v for k, v in data["level_contributions"].items()
        },
        corpus_frontier={
            int(level): ResourceSet(resource_from_dict(r) for r in refs)
            for level, refs in data["corpus_frontier"].items()
        },
        occurrences=data["occurrences"],
        total_insertions=data["total_insertions"],
        total_new_distinct=data["total_new_distinct"],
        new_by_kind=data["new_by_kind"],
        event_histogram=tuple(
            EventTypeRow(
                kind=row["kind"],
                pct_deferred_seeds=row["pct_deferred_seeds"],
                pct_nondeferred_seeds=row["pct_nondeferred_seeds"],
                pct_new_contribution=row["pct_new_contribution"],
            )
            for row in data["event_histogram"]
        ),
        contribution_cdf=tuple(
            (int(rank), float(share)) for rank, share in data["contribution_cdf"]
        ),
        max_depth=data["max_depth"],
    )
