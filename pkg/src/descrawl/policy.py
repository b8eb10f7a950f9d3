"""Crawl-time and storage cost models plus crawl policy selection.

The crawl-time model compares cumulative per-level times and frontier sizes
against a baseline crawler run; marginal discovery rates decide which
levels a return-on-investment policy keeps. The storage model prices
per-descendant metadata records and per-level embedded-resource payloads,
and extrapolates linearly to archive-scale monthly/yearly crawls.

All internal values stay exact; rounding (two decimals, half-up) happens
only at presentation time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Mapping

KB = 1_000.0
MB = 1_000_000.0


class EstimateError(ValueError):
    """Inputs outside the cost model's domain."""


def round_half_up(value: float, places: int = 2) -> float:
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def fmt_ratio(value: float) -> str:
    return f"{Decimal(repr(value)).quantize(Decimal('0.01'), rounding=ROUND_HALF_UP)}x"


@dataclass(frozen=True)
class CrawlRates:
    """Measured crawl throughput: baseline crawler vs descendant-aware
    crawling. Used only for forward prediction; measured times are
    preferred inputs."""

    baseline_rate: float = 2.065
    descendant_rate: float = 0.170

    def __post_init__(self) -> None:
        if self.baseline_rate <= 0 or self.descendant_rate <= 0:
            raise EstimateError("crawl rates must be positive")


def predict_times_from_rates(
    frontier_by_level: Mapping[int, int], baseline_size: int, rates: CrawlRates
) -> tuple[float, dict[int, float]]:
    """Model-predicted (baseline_time, per-level times). A labelled model,
    not a measurement: real runs should supply measured times."""
    baseline_time = baseline_size / rates.baseline_rate
    times = {
        level: size / rates.descendant_rate
        for level, size in frontier_by_level.items()
    }
    return baseline_time, times


@dataclass(frozen=True)
class LevelEstimate:
    level: int
    time_s: float
    frontier_size: int
    time_ratio: float
    size_ratio: float
    marginal_new_per_s: float | None
    marginal_flag: str | None = None


@dataclass(frozen=True)
class CrawlEstimate:
    baseline_time_s: float
    baseline_size: int
    levels: tuple[LevelEstimate, ...]

    def level(self, n: int) -> LevelEstimate:
        for entry in self.levels:
            if entry.level == n:
                return entry
        raise KeyError(n)

    def rounded(self) -> list[dict]:
        """Presentation view: two-decimal half-up strings."""
        rows = []
        for entry in self.levels:
            rows.append(
                {
                    "level": entry.level,
                    "time_s": entry.time_s,
                    "size": entry.frontier_size,
                    "time_increase": fmt_ratio(entry.time_ratio),
                    "size_increase": fmt_ratio(entry.size_ratio),
                    "marginal_new_per_s": (
                        round_half_up(entry.marginal_new_per_s)
                        if entry.marginal_new_per_s is not None
                        else None
                    ),
                    "marginal_flag": entry.marginal_flag,
                }
            )
        return rows


def estimate_crawl(
    frontier_by_level: Mapping[int, int],
    baseline_size: int,
    times_by_level: Mapping[int, float],
    baseline_time: float,
) -> CrawlEstimate:
    """Relative cost of crawling each cumulative state level.

    Ratios compare each level's time/size to the baseline run. The marginal
    rate of a level is the new URIs it adds per added second over the
    previous level (the baseline for the first level); if time does not
    strictly increase the marginal is undefined and flagged, never faked.
    """
    if baseline_time <= 0 or baseline_size <= 0:
        raise EstimateError("baseline time and size must be positive")
    if set(frontier_by_level) != set(times_by_level):
        raise EstimateError("frontier and time maps must cover the same levels")
    levels = sorted(frontier_by_level)
    if not levels:
        raise EstimateError("at least one level is required")

    entries = []
    prev_size, prev_time = baseline_size, float(baseline_time)
    for level in levels:
        size = frontier_by_level[level]
        time_s = float(times_by_level[level])
        if size < 0 or time_s < 0:
            raise EstimateError(f"level {level}: negative input")
        delta_t = time_s - prev_time
        delta_size = size - prev_size
        if delta_t > 0:
            marginal, flag = delta_size / delta_t, None
        else:
            marginal, flag = None, "undefined: time did not increase over previous level"
        entries.append(
            LevelEstimate(
                level=level,
                time_s=time_s,
                frontier_size=size,
                time_ratio=time_s / baseline_time,
                size_ratio=size / baseline_size,
                marginal_new_per_s=marginal,
                marginal_flag=flag,
            )
        )
        prev_size, prev_time = size, time_s
    return CrawlEstimate(
        baseline_time_s=float(baseline_time),
        baseline_size=baseline_size,
        levels=tuple(entries),
    )


class PolicyKind(Enum):
    MAX_COVERAGE = "max-coverage"
    MAX_ROI = "max-roi"


@dataclass(frozen=True)
class CrawlPolicy:
    kind: PolicyKind
    levels_included: frozenset[int]


def select_policy(kind: PolicyKind, estimate: CrawlEstimate) -> CrawlPolicy:
    """Max coverage keeps every discovered level; max ROI drops deepest
    levels whose marginal discovery rate is strictly below the best
    marginal among shallower levels."""
    if not estimate.levels:
        raise EstimateError("estimate has no descendant levels")
    levels = [entry.level for entry in estimate.levels]
    if kind is PolicyKind.MAX_COVERAGE:
        return CrawlPolicy(kind=kind, levels_included=frozenset(levels))
    included = list(levels)
    while len(included) > 1:
        deepest = estimate.level(included[-1])
        shallower = [
            estimate.level(l).marginal_new_per_s
            for l in included[:-1]
            if estimate.level(l).marginal_new_per_s is not None
        ]
        if (
            deepest.marginal_new_per_s is not None
            and shallower
            and deepest.marginal_new_per_s < max(shallower)
        ):
            included.pop()
        else:
            break
    return CrawlPolicy(kind=kind, levels_included=frozenset(included))


@dataclass(frozen=True)
class PolicySavings:
    frontier_retained: float
    time_reduction: float


def policy_savings(estimate: CrawlEstimate, policy: CrawlPolicy) -> PolicySavings:
    """Frontier retained and crawl time saved by a policy relative to
    crawling every discovered level."""
    full = estimate.levels[-1]
    chosen_level = max(policy.levels_included)
    chosen = estimate.level(chosen_level)
    return PolicySavings(
        frontier_retained=chosen.frontier_size / full.frontier_size,
        time_reduction=1.0 - chosen.time_s / full.time_s,
    )


# -- storage model -----------------------------------------------------------


class MetadataUnit(Enum):
    """Counting basis for the metadata line: per descendant record written,
    or per seed URI (both accountings in circulation)."""

    PER_DESCENDANT = "per-descendant"
    PER_SEED = "per-seed"


@dataclass(frozen=True)
class StorageModel:
    """Configured size assumptions for the storage estimate (decimal KB)."""

    metadata_record_kb: float = 16.45
    metadata_unit: MetadataUnit = MetadataUnit.PER_DESCENDANT
    level_mean_kb: Mapping[int, float] = field(
        default_factory=lambda: {1: 2.4, 2: 2.4}
    )
    default_level_mean_kb: float = 2.4
    nondeferred_resources_per_uri: float = 31.02
    nondeferred_mean_kb: float = 2.6
    deferred_root_kb_per_uri: float = 70.0

    def mean_kb_for_level(self, level: int) -> float:
        return self.level_mean_kb.get(level, self.default_level_mean_kb)

    def __post_init__(self) -> None:
        sizes = [
            self.metadata_record_kb,
            self.default_level_mean_kb,
            self.nondeferred_mean_kb,
            self.deferred_root_kb_per_uri,
            *self.level_mean_kb.values(),
        ]
        if any(s <= 0 for s in sizes):
            raise EstimateError("storage model sizes must be positive")


@dataclass(frozen=True)
class StorageCounts:
    """Corpus counts the storage model prices out."""

    descendants: int
    deferred_seeds: int
    nondeferred_seeds: int
    new_resources_by_level: Mapping[int, int]

    def __post_init__(self) -> None:
        counts = [
            self.descendants,
            self.deferred_seeds,
            self.nondeferred_seeds,
            *self.new_resources_by_level.values(),
        ]
        if any(c < 0 for c in counts):
            raise EstimateError("storage counts must be nonnegative")

    @classmethod
    def from_stats(cls, stats) -> "StorageCounts":
        return cls(
            descendants=stats.descendants_total,
            deferred_seeds=stats.deferred.seeds,
            nondeferred_seeds=stats.nondeferred.seeds,
            new_resources_by_level={
                level: len(stats.corpus_frontier[level])
                for level in stats.corpus_frontier
                if level >= 1
            },
        )


@dataclass(frozen=True)
class StorageEstimate:
    """Exact byte totals; presentation rounding happens in views."""

    metadata_bytes: float
    metadata_bytes_by_unit: Mapping[str, float]
    nondeferred_resource_bytes: float
    deferred_root_bytes: float
    deferred_level_bytes: Mapping[int, float]
    months: int | None = None
    scale_factor: float | None = None
    monthly_additional_bytes: float | None = None
    additional_bytes: float | None = None
    total_bytes: float | None = None

    @property
    def resource_bytes(self) -> float:
        return (
            self.nondeferred_resource_bytes
            + self.deferred_root_bytes
            + sum(self.deferred_level_bytes.values())
        )

    @property
    def total_without_metadata(self) -> float:
        return self.resource_bytes

    @property
    def total_with_metadata(self) -> float:
        return self.resource_bytes + self.metadata_bytes


def estimate_storage(
    counts: StorageCounts, model: StorageModel = StorageModel()
) -> StorageEstimate:
    """Price out descendant metadata and embedded-resource storage.

    Componentwise linear in the counts, so estimates over disjoint corpora
    add exactly.
    """
    per_descendant = counts.descendants * model.metadata_record_kb * KB
    per_seed_deferred = counts.deferred_seeds * model.metadata_record_kb * KB
    per_seed_nondeferred = counts.nondeferred_seeds * model.metadata_record_kb * KB
    by_unit = {
        MetadataUnit.PER_DESCENDANT.value: per_descendant,
        MetadataUnit.PER_SEED.value: per_seed_deferred + per_seed_nondeferred,
        "per-seed-deferred": per_seed_deferred,
        "per-seed-nondeferred": per_seed_nondeferred,
    }
    return StorageEstimate(
        metadata_bytes=by_unit[model.metadata_unit.value],
        metadata_bytes_by_unit=by_unit,
        nondeferred_resource_bytes=(
            counts.nondeferred_seeds
            * model.nondeferred_resources_per_uri
            * model.nondeferred_mean_kb
            * KB
        ),
        deferred_root_bytes=(
            counts.deferred_seeds * model.deferred_root_kb_per_uri * KB
        ),
        deferred_level_bytes={
            level: count * model.mean_kb_for_level(level) * KB
            for level, count in sorted(counts.new_resources_by_level.items())
        },
    )


@dataclass(frozen=True)
class CrawlBase:
    """One month of baseline archive crawling: URIs fetched and bytes stored."""

    uris: int
    bytes: float


def extrapolate(
    base: CrawlBase, per_seed: StorageEstimate, seeds: int, months: int
) -> StorageEstimate:
    """Scale a corpus estimate to archive scale.

    The corpus's additional storage (resources plus metadata over ``seeds``
    seeds) scales linearly by ``base.uris / seeds`` per month; any number of
    months is an exact multiple of the monthly figure.
    """
    if seeds <= 0:
        raise EstimateError("seeds must be positive")
    if months < 1:
        raise EstimateError("months must be >= 1")
    factor = base.uris / seeds
    monthly_additional = per_seed.total_with_metadata * factor
    additional = monthly_additional * months
    return StorageEstimate(
        metadata_bytes=per_seed.metadata_bytes * factor * months,
        metadata_bytes_by_unit={
            unit: value * factor * months
            for unit, value in per_seed.metadata_bytes_by_unit.items()
        },
        nondeferred_resource_bytes=(
            per_seed.nondeferred_resource_bytes * factor * months
        ),
        deferred_root_bytes=per_seed.deferred_root_bytes * factor * months,
        deferred_level_bytes={
            level: value * factor * months
            for level, value in per_seed.deferred_level_bytes.items()
        },
        months=months,
        scale_factor=factor,
        monthly_additional_bytes=monthly_additional,
        additional_bytes=additional,
        total_bytes=base.bytes * months + additional,
    )


def crawl_table_view(estimate: CrawlEstimate) -> dict:
    """Printable crawl-cost table with half-up two-decimal ratios."""
    return {
        "baseline": {
            "time_s": estimate.baseline_time_s,
            "size": estimate.baseline_size,
        },
        "levels": estimate.rounded(),
    }


def storage_table_view(estimate: StorageEstimate) -> dict:
    """Printable storage summary in decimal MB."""

    def mb(value: float) -> float:
        return round_half_up(value / MB, 1)

    view = {
        "metadata_mb": mb(estimate.metadata_bytes),
        "metadata_mb_by_unit": {
            unit: mb(value) for unit, value in estimate.metadata_bytes_by_unit.items()
        },
        "nondeferred_resources_mb": mb(estimate.nondeferred_resource_bytes),
        "deferred_root_mb": mb(estimate.deferred_root_bytes),
        "deferred_level_mb": {
            str(level): mb(value)
            for level, value in estimate.deferred_level_bytes.items()
        },
        "total_without_metadata_mb": mb(estimate.total_without_metadata),
        "total_with_metadata_mb": mb(estimate.total_with_metadata),
    }
    if estimate.months is not None:
        view["months"] = estimate.months
        view["monthly_additional_mb"] = mb(estimate.monthly_additional_bytes)
        view["additional_mb"] = mb(estimate.additional_bytes)
        view["total_mb"] = mb(estimate.total_bytes)
    return view
