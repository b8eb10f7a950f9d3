"""Operator command line tying the pipeline together.

Stages read the previous stage's serialized artifacts and are idempotent:
identical inputs produce byte-identical outputs. Every stage writes a
manifest recording the resolved configuration, tool version and input
digests. Settings resolve as defaults < config file < flags < environment.

Exit codes: 0 success, 1 stage failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .analysis import (
    analyze_tree,
    aggregate,
    depth_breadth_table,
    event_type_table,
    occurrence_series,
    occurrence_table,
    state_range_table,
    stats_from_dict,
    stats_to_dict,
    traversal_table,
)
from .crawler import CrawlLimits, crawl_seed, load_results, save_result
from .driver import SimulatedDriver, SiteFixture
from .fixtures import generate_random_corpus, generate_reference_corpus
from .model import DEFAULT_SESSION_PATTERNS
from .policy import (
    CrawlBase,
    CrawlEstimate,
    CrawlRates,
    MetadataUnit,
    PolicyKind,
    StorageCounts,
    StorageModel,
    crawl_table_view,
    estimate_crawl,
    estimate_storage,
    extrapolate,
    policy_savings,
    predict_times_from_rates,
    select_policy,
    storage_table_view,
)
from .timemap import LiveTimeMapBackend, MockArchive, coverage
from .warcmeta import (
    DEFAULT_RECORD_TIMESTAMP,
    emit_descendant_records,
    write_record_stream,
)

EXIT_OK = 0
EXIT_STAGE = 1
EXIT_CONFIG = 2

ENV_TIMEMAP_ENDPOINT = "DESCRAWL_TIMEMAP_ENDPOINT"


class ConfigError(ValueError):
    """Bad or inconsistent run configuration."""


class StageError(RuntimeError):
    """A pipeline stage could not produce its artifacts."""


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out: Path, command: str, config: dict, inputs: list[Path]) -> None:
    manifest = {
        "tool": "descrawl",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256_file(p) for p in sorted(inputs)},
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    file = Path(path)
    if not file.is_file():
        raise ConfigError(f"config file not found: {file}")
    try:
        data = json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {file} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {file} must hold a JSON object")
    return data


def _setting(name: str, file_cfg: dict, flag_value, default, env_var: str | None = None):
    value = default
    if name in file_cfg:
        value = file_cfg[name]
    if flag_value is not None:
        value = flag_value
    if env_var and os.environ.get(env_var):
        value = os.environ[env_var]
    return value


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise StageError(f"expected {hint} at {path}; run the producing stage first")
    return path


# -- gen-fixture ---------------------------------------------------------------


def cmd_gen_fixture(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    preset = _setting("preset", file_cfg, args.preset, None)
    rng_seed = int(_setting("rng_seed", file_cfg, args.rng_seed, 1))
    config = {"preset": preset, "rng_seed": rng_seed, "out": str(out)}
    if preset == "reference":
        corpus = generate_reference_corpus(out, rng_seed=rng_seed)
        print(f"reference corpus: 440 fixtures in {corpus.fixture_dir}")
    elif preset is None:
        count = int(_setting("seeds", file_cfg, args.seeds, 20))
        params = {
            "max_depth": int(_setting("max_depth", file_cfg, args.max_depth, 3)),
            "max_breadth": int(_setting("max_breadth", file_cfg, args.max_breadth, 4)),
            "max_resources": int(
                _setting("max_resources", file_cfg, args.max_resources, 5)
            ),
            "overlap": float(_setting("overlap", file_cfg, args.overlap, 0.3)),
            "max_states": _setting("max_states", file_cfg, args.max_states, None),
        }
        if params["max_states"] is not None:
            params["max_states"] = int(params["max_states"])
        config.update(params, seeds=count)
        paths = generate_random_corpus(out / "fixtures", count, rng_seed, **params)
        print(f"random corpus: {len(paths)} fixtures in {out / 'fixtures'}")
    else:
        raise ConfigError(f"unknown preset {preset!r} (available: reference)")
    _write_manifest(out, "gen-fixture", config, [])
    return EXIT_OK


# -- crawl ---------------------------------------------------------------------


def _limits_from(args: argparse.Namespace, file_cfg: dict) -> CrawlLimits:
    return CrawlLimits(
        max_depth=int(_setting("max_depth", file_cfg, args.max_depth, 3)),
        max_events_per_state=int(
            _setting("max_events_per_state", file_cfg, args.max_events_per_state, 256)
        ),
        max_states_per_seed=int(
            _setting("max_states_per_seed", file_cfg, args.max_states_per_seed, 10_000)
        ),
        explosion_threshold=int(
            _setting(
                "explosion_threshold", file_cfg, args.explosion_threshold, 10_000
            )
        ),
    )


def cmd_crawl(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    fixtures_dir = Path(_setting("fixtures", file_cfg, args.fixtures, "fixtures"))
    _require(fixtures_dir, "a fixture directory")
    seed_list = Path(
        _setting("seed_list", file_cfg, args.seed_list, fixtures_dir / "seeds.txt")
    )
    _require(seed_list, "a seed list")
    index_file = _require(fixtures_dir / "index.json", "a fixture index")
    out = Path(args.out)
    trees_dir = out / "trees"
    trees_dir.mkdir(parents=True, exist_ok=True)
    limits = _limits_from(args, file_cfg)
    workers = int(_setting("workers", file_cfg, args.workers, 1))
    patterns = tuple(
        _setting("session_patterns", file_cfg, args.session_pattern, None)
        or DEFAULT_SESSION_PATTERNS
    )
    emit_metadata = bool(
        _setting("emit_metadata", file_cfg, args.emit_metadata or None, False)
    )
    record_timestamp = _setting(
        "record_timestamp", file_cfg, args.record_timestamp, DEFAULT_RECORD_TIMESTAMP
    )

    seeds = [
        line.strip()
        for line in seed_list.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    index = {
        entry["uri"]: entry["file"]
        for entry in json.loads(index_file.read_text(encoding="utf-8"))["seeds"]
    }
    if not seeds:
        print("warning: seed list is empty; nothing to crawl", file=sys.stderr)
        _write_json(out / "summary.json", {"seeds": [], "totals": {"seeds": 0}})
        _write_manifest(
            out,
            "crawl",
            {"fixtures": str(fixtures_dir), "workers": workers},
            [seed_list, index_file],
        )
        return EXIT_OK

    def run_one(seed_uri: str) -> dict:
        fixture_name = index.get(seed_uri)
        if fixture_name is None:
            raise StageError(f"seed {seed_uri!r} has no fixture in {index_file}")
        fixture = SiteFixture.load(fixtures_dir / fixture_name)
        result = crawl_seed(
            seed_uri,
            lambda: SimulatedDriver(fixture, session_patterns=patterns),
            limits,
        )
        out_name = Path(fixture_name).stem + ".json"
        save_result(result, trees_dir / out_name)
        if emit_metadata:
            metadata_dir = out / "metadata"
            metadata_dir.mkdir(exist_ok=True)
            driver = SimulatedDriver(fixture, session_patterns=patterns)
            root_handle = driver.load(seed_uri)

            def content_for(state):
                if len(state.script) == 0:
                    return driver.markup(root_handle)
                handle, _ = driver.execute(root_handle, state.script)
                return driver.markup(handle)

            write_record_stream(
                metadata_dir / (Path(fixture_name).stem + ".ndjson"),
                emit_descendant_records(
                    result.tree, timestamp=record_timestamp, content_for=content_for
                ),
            )
        tree = result.tree
        return {
            "seed": seed_uri,
            "file": out_name,
            "deferred": result.classification.deferred,
            "nodes": len(tree.nodes),
            "descendants": tree.descendant_count,
            "max_level": tree.max_level,
            "breaches": list(tree.breaches),
            "skipped_states": sorted(
                node_id
                for node_id, state in tree.nodes.items()
                if state.skip_reason
            ),
        }

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_one, seeds))
    else:
        rows = [run_one(seed) for seed in seeds]

    totals = {
        "seeds": len(rows),
        "deferred": sum(1 for r in rows if r["deferred"]),
        "nondeferred": sum(1 for r in rows if not r["deferred"]),
        "descendants": sum(r["descendants"] for r in rows),
        "max_level": max(r["max_level"] for r in rows),
        "breached_seeds": sum(1 for r in rows if r["breaches"]),
        "skipped_states": sum(len(r["skipped_states"]) for r in rows),
    }
    _write_json(out / "summary.json", {"seeds": rows, "totals": totals})
    _write_manifest(
        out,
        "crawl",
        {
            "fixtures": str(fixtures_dir),
            "seed_list": str(seed_list),
            "limits": {
                "max_depth": limits.max_depth,
                "max_events_per_state": limits.max_events_per_state,
                "max_states_per_seed": limits.max_states_per_seed,
                "explosion_threshold": limits.explosion_threshold,
            },
            "workers": workers,
            "session_patterns": list(patterns),
            "emit_metadata": emit_metadata,
        },
        [seed_list, index_file],
    )
    print(
        f"crawled {totals['seeds']} seeds: {totals['deferred']} deferred, "
        f"{totals['nondeferred']} nondeferred, {totals['descendants']} descendants"
    )
    return EXIT_OK


# -- analyze -------------------------------------------------------------------


def cmd_analyze(args: argparse.Namespace) -> int:
    trees_dir = _require(Path(args.trees), "a crawl tree directory")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = load_results(trees_dir)
    if not results:
        raise StageError(f"no crawl results found in {trees_dir}")
    pairs = [(r.classification, analyze_tree(r.tree)) for r in results]
    stats = aggregate(pairs)
    _write_json(out / "stats.json", stats_to_dict(stats))
    _write_manifest(
        out,
        "analyze",
        {"trees": str(trees_dir), "seeds": len(results)},
        sorted(trees_dir.glob("*.json")),
    )
    print(
        f"analyzed {len(results)} seeds: {stats.descendants_total} descendants, "
        f"{stats.contributing_paths_total} contributing paths"
    )
    return EXIT_OK


# -- coverage ------------------------------------------------------------------


def cmd_coverage(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    stats_file = _require(Path(args.stats), "an analysis stats file")
    holdings = _setting("holdings", file_cfg, args.holdings, None)
    endpoint = _setting(
        "timemap_endpoint", file_cfg, args.endpoint, None, env_var=ENV_TIMEMAP_ENDPOINT
    )
    if bool(holdings) == bool(endpoint):
        raise ConfigError(
            "coverage needs exactly one of --holdings (mock) or --endpoint (live)"
        )
    workers = int(_setting("workers", file_cfg, args.workers, 8))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    stats = stats_from_dict(json.loads(stats_file.read_text(encoding="utf-8")))
    if holdings:
        backend = MockArchive.from_file(_require(Path(holdings), "a holdings file"))
    else:
        backend = LiveTimeMapBackend(endpoint)
    report = coverage(stats.corpus_frontier, backend, workers=workers)

    _write_json(
        out / "coverage.json",
        {
            "per_level": [
                {
                    "level": entry.level,
                    "total": entry.total,
                    "unarchived": entry.unarchived,
                    "failed": entry.failed,
                    "fraction_unarchived": entry.fraction_unarchived,
                }
                for entry in report.per_level
            ],
            "lookup_failures": report.lookup_failures,
            "mime_histogram": dict(report.mime_histogram),
        },
    )
    _write_csv(
        out / "coverage_levels.csv",
        ["level", "total", "unarchived", "failed", "fraction_unarchived"],
        [
            [e.level, e.total, e.unarchived, e.failed, f"{e.fraction_unarchived:.6f}"]
            for e in report.per_level
        ],
    )
    _write_csv(
        out / "unarchived_mime.csv",
        ["mime", "count"],
        sorted(report.mime_histogram.items(), key=lambda kv: (-kv[1], kv[0])),
    )
    _write_csv(
        out / "unarchived_sizes.csv",
        ["size_bytes", "cumulative_fraction"],
        [[size, f"{frac:.6f}"] for size, frac in report.size_series],
    )
    _write_manifest(
        out,
        "coverage",
        {
            "stats": str(stats_file),
            "holdings": holdings and str(holdings),
            "endpoint": endpoint,
            "workers": workers,
        },
        [stats_file] + ([Path(holdings)] if holdings else []),
    )
    for entry in report.per_level:
        print(
            f"level {entry.level}: {entry.fraction_unarchived:.2%} unarchived "
            f"({entry.unarchived}/{entry.total}, {entry.failed} failed lookups)"
        )
    return EXIT_OK


# -- estimate ------------------------------------------------------------------


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def cmd_estimate(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stats = None
    inputs: list[Path] = []
    if args.stats:
        stats_file = _require(Path(args.stats), "an analysis stats file")
        inputs.append(stats_file)
        stats = stats_from_dict(json.loads(stats_file.read_text(encoding="utf-8")))

    sizes_flag = _setting("sizes", file_cfg, args.sizes, None)
    if sizes_flag:
        sizes = _parse_int_list(sizes_flag)
        frontier = dict(enumerate(sizes))
    elif stats is not None:
        frontier = dict(stats.level_contributions)
    else:
        raise ConfigError("estimate needs --sizes or --stats")

    baseline_size = _setting("baseline_size", file_cfg, args.baseline_size, None)
    if baseline_size is None:
        raise ConfigError("estimate needs --baseline-size")
    baseline_size = int(baseline_size)

    rates = CrawlRates(
        baseline_rate=float(
            _setting("baseline_rate", file_cfg, args.baseline_rate, 2.065)
        ),
        descendant_rate=float(
            _setting("descendant_rate", file_cfg, args.descendant_rate, 0.170)
        ),
    )
    times_flag = _setting("times", file_cfg, args.times, None)
    baseline_time = _setting("baseline_time", file_cfg, args.baseline_time, None)
    predicted = False
    if times_flag and baseline_time is not None:
        times = dict(zip(sorted(frontier), _parse_float_list(times_flag)))
        baseline_time = float(baseline_time)
    else:
        baseline_time, times = predict_times_from_rates(frontier, baseline_size, rates)
        predicted = True

    estimate = estimate_crawl(frontier, baseline_size, times, baseline_time)
    policy_name = _setting("policy", file_cfg, args.policy, "max-roi")
    policy = select_policy(PolicyKind(policy_name), estimate)
    savings = policy_savings(estimate, policy)

    model = StorageModel(
        metadata_record_kb=float(
            _setting("metadata_kb", file_cfg, args.metadata_kb, 16.45)
        ),
        metadata_unit=MetadataUnit(
            _setting("metadata_unit", file_cfg, args.metadata_unit, "per-descendant")
        ),
        level_mean_kb={
            1: float(_setting("level1_kb", file_cfg, args.level1_kb, 2.4)),
            2: float(_setting("level2_kb", file_cfg, args.level2_kb, 2.4)),
        },
        nondeferred_resources_per_uri=float(
            _setting(
                "nondeferred_resources_per_uri",
                file_cfg,
                args.nondeferred_resources_per_uri,
                31.02,
            )
        ),
        nondeferred_mean_kb=float(
            _setting("nondeferred_mean_kb", file_cfg, args.nondeferred_mean_kb, 2.6)
        ),
        deferred_root_kb_per_uri=float(
            _setting("deferred_root_kb", file_cfg, args.deferred_root_kb, 70.0)
        ),
    )
    storage = storage_view = None
    if stats is not None:
        counts = StorageCounts.from_stats(stats)
        storage = estimate_storage(counts, model)
        months = _setting("months", file_cfg, args.months, None)
        base_uris = _setting("base_uris", file_cfg, args.base_uris, None)
        base_bytes = _setting("base_bytes", file_cfg, args.base_bytes, None)
        if months is not None and base_uris is not None:
            storage = extrapolate(
                CrawlBase(uris=int(base_uris), bytes=float(base_bytes or 0)),
                storage,
                seeds=stats.seeds_total,
                months=int(months),
            )
        storage_view = storage_table_view(storage)

    crawl_view = crawl_table_view(estimate)
    payload = {
        "predicted_times": predicted,
        "crawl": crawl_view,
        "policy": {
            "kind": policy.kind.value,
            "levels_included": sorted(policy.levels_included),
            "frontier_retained": savings.frontier_retained,
            "time_reduction": savings.time_reduction,
        },
    }
    if storage_view is not None:
        payload["storage"] = storage_view
    _write_json(out / "estimate.json", payload)
    _write_csv(
        out / "crawl_cost.csv",
        ["level", "time_s", "size", "time_increase", "size_increase", "marginal"],
        [
            [
                row["level"],
                row["time_s"],
                row["size"],
                row["time_increase"],
                row["size_increase"],
                row["marginal_new_per_s"],
            ]
            for row in crawl_view["levels"]
        ],
    )
    _write_manifest(
        out,
        "estimate",
        {"policy": policy_name, "predicted_times": predicted},
        inputs,
    )

    print(f"baseline: {estimate.baseline_time_s:g} s, {estimate.baseline_size} URIs")
    for row in crawl_view["levels"]:
        marginal = row["marginal_new_per_s"]
        print(
            f"level {row['level']}: {row['time_increase']} time, "
            f"{row['size_increase']} size, "
            f"marginal {marginal if marginal is not None else 'undefined'}"
        )
    print(
        f"policy {policy.kind.value}: levels {sorted(policy.levels_included)}, "
        f"retains {savings.frontier_retained:.1%} of frontier, "
        f"saves {savings.time_reduction:.1%} of crawl time"
    )
    return EXIT_OK


# -- report --------------------------------------------------------------------


def cmd_report(args: argparse.Namespace) -> int:
    run = Path(args.run)
    stats_file = _require(run / "analysis" / "stats.json", "analysis output")
    out = Path(args.out) if args.out else run / "report"
    out.mkdir(parents=True, exist_ok=True)
    stats = stats_from_dict(json.loads(stats_file.read_text(encoding="utf-8")))
    inputs = [stats_file]

    summary = traversal_table(stats)
    _write_json(out / "summary.json", summary)

    _write_csv(
        out / "depth_breadth.csv",
        ["metric", "deferred_avg", "deferred_s", "nondeferred_avg", "nondeferred_s"],
        [
            [
                row["metric"],
                f"{row['deferred_avg']:.2f}",
                f"{row['deferred_s']:.2f}",
                f"{row['nondeferred_avg']:.2f}",
                f"{row['nondeferred_s']:.2f}",
            ]
            for row in depth_breadth_table(stats)
        ],
    )
    _write_csv(
        out / "state_ranges.csv",
        ["statistic", "deferred", "nondeferred"],
        [
            [row["statistic"], row["deferred"], row["nondeferred"]]
            for row in state_range_table(stats)
        ],
    )
    _write_csv(
        out / "event_types.csv",
        ["kind", "pct_deferred_seeds", "pct_nondeferred_seeds", "pct_new_contribution"],
        [
            [
                row["kind"],
                f"{row['pct_deferred_seeds']:.4f}",
                f"{row['pct_nondeferred_seeds']:.4f}",
                f"{row['pct_new_contribution']:.4f}",
            ]
            for row in event_type_table(stats)
        ],
    )
    top_k = int(args.top_k) if args.top_k else 10
    occurrences = occurrence_table(stats, k=top_k)
    _write_csv(
        out / "occurrences.csv",
        ["uri", "occurrences"],
        [[row["uri"], row["occurrences"]] for row in occurrences["entries"]],
    )
    _write_json(out / "occurrences.json", occurrences)
    _write_csv(
        out / "level_contributions.csv",
        ["level", "cumulative_frontier"],
        sorted(stats.level_contributions.items()),
    )
    _write_csv(
        out / "occurrence_series.csv",
        ["rank", "occurrences"],
        occurrence_series(stats),
    )
    _write_csv(
        out / "contribution_cdf.csv",
        ["rank", "cumulative_share"],
        [[rank, f"{share:.6f}"] for rank, share in stats.contribution_cdf],
    )
    tables = {
        "depth_breadth": depth_breadth_table(stats),
        "state_ranges": state_range_table(stats),
        "event_types": event_type_table(stats),
        "traversal": summary,
        "occurrences": occurrences,
    }

    coverage_file = run / "coverage" / "coverage.json"
    if coverage_file.is_file():
        tables["coverage"] = json.loads(coverage_file.read_text(encoding="utf-8"))
        inputs.append(coverage_file)
    estimate_file = run / "estimate" / "estimate.json"
    if estimate_file.is_file():
        tables["estimate"] = json.loads(estimate_file.read_text(encoding="utf-8"))
        inputs.append(estimate_file)
    _write_json(out / "tables.json", tables)
    _write_manifest(out, "report", {"run": str(run), "top_k": top_k}, inputs)
    print(
        f"report: {summary['seeds_total']} seeds "
        f"({summary['seeds_deferred']} deferred / "
        f"{summary['seeds_nondeferred']} nondeferred), "
        f"{summary['descendants_total']} descendants, "
        f"{summary['contributing_paths']} contributing paths"
    )
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="descrawl",
        description="Crawl, analyze and cost out client-side descendant states.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-fixture", help="generate site fixtures")
    gen.add_argument("--out", required=True)
    gen.add_argument("--config")
    gen.add_argument("--preset", choices=["reference"])
    gen.add_argument("--seeds", type=int)
    gen.add_argument("--rng-seed", type=int, dest="rng_seed")
    gen.add_argument("--max-depth", type=int, dest="max_depth")
    gen.add_argument("--max-breadth", type=int, dest="max_breadth")
    gen.add_argument("--max-resources", type=int, dest="max_resources")
    gen.add_argument("--overlap", type=float)
    gen.add_argument("--max-states", type=int, dest="max_states")
    gen.set_defaults(func=cmd_gen_fixture)

    crawl = sub.add_parser("crawl", help="crawl fixtures into state trees")
    crawl.add_argument("--fixtures")
    crawl.add_argument("--seed-list", dest="seed_list")
    crawl.add_argument("--out", required=True)
    crawl.add_argument("--config")
    crawl.add_argument("--max-depth", type=int, dest="max_depth")
    crawl.add_argument(
        "--max-events-per-state", type=int, dest="max_events_per_state"
    )
    crawl.add_argument("--max-states-per-seed", type=int, dest="max_states_per_seed")
    crawl.add_argument("--explosion-threshold", type=int, dest="explosion_threshold")
    crawl.add_argument("--workers", type=int)
    crawl.add_argument(
        "--session-pattern", action="append", dest="session_pattern"
    )
    crawl.add_argument("--emit-metadata", action="store_true", dest="emit_metadata")
    crawl.add_argument("--record-timestamp", dest="record_timestamp")
    crawl.set_defaults(func=cmd_crawl)

    analyze = sub.add_parser("analyze", help="analyze crawl trees")
    analyze.add_argument("--trees", required=True)
    analyze.add_argument("--out", required=True)
    analyze.add_argument("--config")
    analyze.set_defaults(func=cmd_analyze)

    cov = sub.add_parser("coverage", help="audit archival coverage")
    cov.add_argument("--stats", required=True)
    cov.add_argument("--holdings")
    cov.add_argument("--endpoint")
    cov.add_argument("--workers", type=int)
    cov.add_argument("--out", required=True)
    cov.add_argument("--config")
    cov.set_defaults(func=cmd_coverage)

    est = sub.add_parser("estimate", help="crawl-time, policy and storage estimates")
    est.add_argument("--out", required=True)
    est.add_argument("--config")
    est.add_argument("--stats")
    est.add_argument("--sizes", help="comma-separated cumulative frontier sizes")
    est.add_argument("--times", help="comma-separated cumulative crawl times (s)")
    est.add_argument("--baseline-size", type=int, dest="baseline_size")
    est.add_argument("--baseline-time", type=float, dest="baseline_time")
    est.add_argument("--baseline-rate", type=float, dest="baseline_rate")
    est.add_argument("--descendant-rate", type=float, dest="descendant_rate")
    est.add_argument("--policy", choices=[k.value for k in PolicyKind])
    est.add_argument("--metadata-kb", type=float, dest="metadata_kb")
    est.add_argument(
        "--metadata-unit",
        choices=[u.value for u in MetadataUnit],
        dest="metadata_unit",
    )
    est.add_argument("--level1-kb", type=float, dest="level1_kb")
    est.add_argument("--level2-kb", type=float, dest="level2_kb")
    est.add_argument(
        "--nondeferred-resources-per-uri",
        type=float,
        dest="nondeferred_resources_per_uri",
    )
    est.add_argument(
        "--nondeferred-mean-kb", type=float, dest="nondeferred_mean_kb"
    )
    est.add_argument("--deferred-root-kb", type=float, dest="deferred_root_kb")
    est.add_argument("--months", type=int)
    est.add_argument("--base-uris", type=int, dest="base_uris")
    est.add_argument("--base-bytes", type=float, dest="base_bytes")
    est.set_defaults(func=cmd_estimate)

    rep = sub.add_parser("report", help="emit tables and figure series")
    rep.add_argument("--run", required=True)
    rep.add_argument("--out")
    rep.add_argument("--top-k", type=int, dest="top_k")
    rep.add_argument("--config")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # stage failures must not kill the shell
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    raise SystemExit(main())
