"""Synthetic site-fixture corpora: randomized trees and a shaped reference
corpus.

The reference corpus is generated to exact, known aggregate totals (seed
split, descendant counts per level and stratum, contributing paths, global
frontier sizes per level, top occurrence counts) so the counting machinery
downstream can be validated end to end. A matching mock-archive holdings
file is emitted alongside, tuned so per-level unarchived fractions land at
0.12 / 0.92 / 0.96.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .driver import FixtureResource, FixtureState, SiteFixture

# -- deterministic partition helpers ------------------------------------------


def spread(
    total: int,
    parts: int,
    rng: random.Random,
    minimum: int = 0,
    maximum: int | None = None,
) -> list[int]:
    """Partition ``total`` into ``parts`` cells within [minimum, maximum],
    summing exactly, deterministically for a given rng state."""
    if parts == 0:
        if total:
            raise ValueError("cannot spread a nonzero total over zero parts")
        return []
    if maximum is None:
        maximum = total
    if not (parts * minimum <= total <= parts * maximum):
        raise ValueError(
            f"cannot spread {total} over {parts} parts within "
            f"[{minimum}, {maximum}]"
        )
    cells = [minimum] * parts
    remaining = total - minimum * parts
    room = maximum - minimum
    if remaining and room:
        weights = [rng.random() for _ in range(parts)]
        wsum = sum(weights) or 1.0
        budget = remaining
        for i in range(parts):
            take = min(room, int(budget * weights[i] / wsum))
            cells[i] += take
            remaining -= take
        order = list(range(parts))
        rng.shuffle(order)
        j = 0
        while remaining > 0:
            i = order[j % parts]
            if cells[i] < maximum:
                cells[i] += 1
                remaining -= 1
            j += 1
    return cells


def spread_capped(
    total: int, caps: Sequence[int], rng: random.Random
) -> list[int]:
    """Partition ``total`` over cells with per-cell caps, summing exactly."""
    if total > sum(caps):
        raise ValueError(f"cannot spread {total} under caps summing {sum(caps)}")
    cells = [0] * len(caps)
    remaining = total
    if remaining:
        weights = [rng.random() * cap for cap in caps]
        wsum = sum(weights) or 1.0
        for i, cap in enumerate(caps):
            take = min(cap, int(remaining * weights[i] / wsum)) if wsum else 0
            cells[i] = min(take, cap)
        remaining = total - sum(cells)
        order = list(range(len(caps)))
        rng.shuffle(order)
        j = 0
        while remaining > 0:
            i = order[j % len(caps)]
            if cells[i] < caps[i]:
                cells[i] += 1
                remaining -= 1
            j += 1
    return cells


# -- resource/event flavour ----------------------------------------------------

_NEW_RESOURCE_MIMES = (
    ("image/png", ".png", 30),
    ("image/jpeg", ".jpg", 18),
    ("image/gif", ".gif", 7),
    ("application/javascript", ".js", 20),
    ("text/html", ".html", 10),
    ("application/json", ".json", 8),
    ("text/css", ".css", 7),
)

_ROOT_RESOURCE_MIMES = (
    ("text/css", ".css", 22),
    ("application/javascript", ".js", 30),
    ("image/png", ".png", 22),
    ("image/jpeg", ".jpg", 12),
    ("text/html", ".html", 8),
    ("application/json", ".json", 6),
)

_DEFERRED_KINDS = (
    ("click", 45),
    ("mouseover", 18),
    ("mousedown", 8),
    ("blur", 6),
    ("change", 5),
    ("mouseout", 4),
    ("keydown", 3),
    ("keypress", 2),
    ("focus", 2),
    ("submit", 2),
    ("unload", 1),
    ("dblclick", 1),
    ("focusout", 1),
    ("mouseup", 1),
    ("touchstart", 1),  # lands in the "other" reporting bucket
)

_NONDEFERRED_KINDS = (
    ("click", 40),
    ("mouseover", 25),
    ("change", 15),
    ("mousedown", 10),
    ("mouseup", 5),
    ("focus", 5),
)

_MAX_RESOURCE_BYTES = 4_600_000


def _pick(table, rng: random.Random):
    population = [row[:-1] for row in table]
    weights = [row[-1] for row in table]
    return rng.choices(population, weights=weights, k=1)[0]


def _resource_size(rng: random.Random) -> int:
    return min(int(rng.lognormvariate(7.0, 1.6)), _MAX_RESOURCE_BYTES)


def _make_resource(uri_base: str, index: int, rng: random.Random, table) -> FixtureResource:
    mime, ext = _pick(table, rng)
    return FixtureResource(
        uri=f"{uri_base}/r{index}{ext}", mime=mime, size=_resource_size(rng)
    )


# -- randomized fixtures -------------------------------------------------------


def random_fixture(
    rng: random.Random,
    seed_uri: str,
    *,
    max_depth: int = 3,
    max_breadth: int = 4,
    max_resources: int = 5,
    overlap: float = 0.3,
    max_states: int | None = None,
) -> SiteFixture:
    """One random, well-formed fixture.

    ``overlap`` is the probability that a state re-requests an already-used
    URI (exercising dedup along and across branches). The state count never
    exceeds ``max_states`` when given.
    """
    host = seed_uri.split("/", 3)[2] if "://" in seed_uri else "rand.example.org"
    pool: list[str] = []
    states: dict[str, FixtureState] = {}
    counters = {"uri": 0, "target": 0, "states": 1}

    def resources_for_state(count: int) -> tuple[FixtureResource, ...]:
        out = []
        for _ in range(count):
            if pool and rng.random() < overlap:
                uri = rng.choice(pool)
                mime, ext = "", ""
            else:
                mime, ext = _pick(_NEW_RESOURCE_MIMES, rng)
                uri = f"http://assets.{host}/r{counters['uri']}{ext}"
                counters["uri"] += 1
                pool.append(uri)
            out.append(
                FixtureResource(uri=uri, mime=mime, size=_resource_size(rng))
            )
        return tuple(out)

    def build(key: str, depth: int) -> None:
        n_resources = rng.randint(0, max_resources)
        if depth == 0 and n_resources == 0:
            n_resources = 1  # pages always load something
        events = []
        if depth < max_depth:
            for _ in range(rng.randint(0, max_breadth)):
                if max_states is not None and counters["states"] >= max_states:
                    break
                kind = _pick(_DEFERRED_KINDS, rng)[0]
                target = f"t{counters['target']}"
                counters["target"] += 1
                counters["states"] += 1
                events.append((target, kind))
        states[key] = FixtureState(
            resources=resources_for_state(n_resources), events=tuple(events)
        )
        for target, kind in events:
            child_key = f"{key}/{target}:{kind}" if key else f"{target}:{kind}"
            build(child_key, depth + 1)

    build("", 0)
    fixture = SiteFixture(seed=seed_uri, states=states)
    fixture.validate()
    return fixture


def generate_random_corpus(
    out_dir: str | Path,
    count: int,
    rng_seed: int,
    *,
    max_depth: int = 3,
    max_breadth: int = 4,
    max_resources: int = 5,
    overlap: float = 0.3,
    max_states: int | None = None,
) -> list[Path]:
    """Write ``count`` random fixtures plus seeds.txt and index.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(rng_seed)
    paths = []
    index = []
    for i in range(count):
        seed_uri = f"http://rand-{i:04d}.example.org/page"
        fixture = random_fixture(
            rng,
            seed_uri,
            max_depth=max_depth,
            max_breadth=max_breadth,
            max_resources=max_resources,
            overlap=overlap,
            max_states=max_states,
        )
        path = out / f"rand-{i:04d}.json"
        fixture.save(path)
        paths.append(path)
        index.append({"uri": seed_uri, "file": path.name})
    _write_corpus_listing(out, index)
    return paths


def _write_corpus_listing(out: Path, index: list[dict]) -> None:
    (out / "seeds.txt").write_text(
        "".join(entry["uri"] + "\n" for entry in index), encoding="utf-8"
    )
    (out / "index.json").write_text(
        json.dumps({"seeds": index}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


# -- the shaped reference corpus ----------------------------------------------

REFERENCE_RNG_SEED = 20150717

REFERENCE_TOTALS = {
    "seeds": 440,
    "seeds_deferred": 303,
    "seeds_nondeferred": 137,
    "descendants": 8_691,
    "descendants_deferred": 8_519,
    "descendants_nondeferred": 172,
    "level1_nodes": 6_051,
    "level2_nodes": 2_468,
    "contributing_paths": 2_080,
    "level_contributions": {0: 11_942, 1: 56_957, 2: 66_320},
    "total_new_distinct": 54_378,
    "max_depth": 2,
    "top10_occurrences": 12_239,
    "unarchived_fractions": {0: 0.12, 1: 0.92, 2: 0.96},
}

# Heavily repeated frontier resources (ad and analytics endpoints) planted
# with fixed occurrence counts; already in canonical form, all distinct.
REFERENCE_POPULAR: tuple[tuple[str, int], ...] = (
    ("http://ads.pubmatic.com/AdServer/js/showad.js", 1_607),
    ("http://edge.quantserve.com/quant.js", 1_494),
    ("http://www.benzinga.com/ajax-cache/market-overview/index-update", 1_469),
    ("https://ads.pubmatic.com/AdServer/js/showad.js", 1_356),
    ("http://www.google-analytics.com/analytics.js", 1_200),
    ("http://b.scorecardresearch.com/beacon.js", 1_164),
    ("http://www.google-analytics.com/ga.js", 1_090),
    ("http://www.google.com/pagead/drt/ui", 1_038),
    ("http://js.moatads.com/advancedigital402839074273/moatad.js", 1_003),
    ("http://a.postrelease.com/serve/load.js?async=true", 818),
)

_POPULAR_META = {
    ".js": ("application/javascript", 11_000),
    "index-update": ("application/json", 2_300),
    "drt/ui": ("text/html", 1_800),
}

_D_SEEDS = 303
_N_SEEDS = 137
_D_LEVEL1 = 6_051
_D_LEVEL2 = 2_468
_DEPTH2_SEEDS = 142
_CONTRIB_L1 = 1_800
_CONTRIB_L2 = 280
_D_ROOT_POOL = 7_692
_N_ROOT_POOL = 4_350
_SHARED_ROOT = 100
_L1_FILLER = 45_005
_L2_FILLER = 9_363
_UNARCHIVED = {0: 1_433, 1: 41_414, 2: 8_988}
# Root-event counts for the nondeferred stratum: a 13-listener maximum, a
# zero-listener majority, 172 level-1 states in all.
_N_BREADTHS = [13] + [10] * 6 + [9] * 11 + [0] * 119


def _popular_resource(uri: str) -> FixtureResource:
    for marker, (mime, size) in _POPULAR_META.items():
        if uri.endswith(marker) or marker in uri:
            return FixtureResource(uri=uri, mime=mime, size=size)
    return FixtureResource(uri=uri, mime="application/javascript", size=11_000)


@dataclass(frozen=True)
class ReferenceCorpus:
    root: Path
    fixture_dir: Path
    seeds_file: Path
    holdings_file: Path
    expected_file: Path


def generate_reference_corpus(
    out_dir: str | Path, rng_seed: int = REFERENCE_RNG_SEED
) -> ReferenceCorpus:
    """Write the 440-seed reference corpus and its mock-archive holdings."""
    out = Path(out_dir)
    fixture_dir = out / "fixtures"
    fixture_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(rng_seed)

    breadths = spread(_D_LEVEL1, _D_SEEDS, rng, minimum=1, maximum=60)
    depth2_seeds = sorted(rng.sample(range(_D_SEEDS), _DEPTH2_SEEDS))
    l2_counts = dict(
        zip(depth2_seeds, spread(_D_LEVEL2, _DEPTH2_SEEDS, rng, minimum=1, maximum=60))
    )
    contrib1 = [
        1 + extra
        for extra in spread_capped(
            _CONTRIB_L1 - _D_SEEDS, [b - 1 for b in breadths], rng
        )
    ]
    contrib2_by_seed = dict(
        zip(
            depth2_seeds,
            spread_capped(_CONTRIB_L2, [l2_counts[s] for s in depth2_seeds], rng),
        )
    )
    d_root_quotas = spread(_D_ROOT_POOL, _D_SEEDS, rng, minimum=10, maximum=60)
    n_root_quotas = spread(_N_ROOT_POOL, _N_SEEDS, rng, minimum=10, maximum=60)
    l1_quotas = spread(_L1_FILLER, _CONTRIB_L1, rng, minimum=1, maximum=120)
    l2_quotas = spread(_L2_FILLER, _CONTRIB_L2, rng, minimum=1, maximum=120)

    popular_by_slot: dict[int, list[str]] = {}
    for uri, count in REFERENCE_POPULAR:
        for slot in rng.sample(range(_CONTRIB_L1), count):
            popular_by_slot.setdefault(slot, []).append(uri)

    shared = [f"http://shared-cdn.example.com/lib{k:03d}.js" for k in range(_SHARED_ROOT)]
    n_breadths = list(_N_BREADTHS)
    rng.shuffle(n_breadths)

    root_pool: list[str] = list(shared)
    l1_pool: list[str] = [uri for uri, _ in REFERENCE_POPULAR]
    l2_pool: list[str] = []
    index: list[dict] = []
    l1_slot = 0
    l2_slot = 0

    for i in range(_D_SEEDS):
        seed_uri = f"http://seed-d{i:03d}.example.com/page"
        states: dict[str, FixtureState] = {}
        root_resources: list[FixtureResource] = []
        if i < _SHARED_ROOT:
            root_resources.append(
                FixtureResource(uri=shared[i], mime="application/javascript", size=9_500)
            )
        uniques = d_root_quotas[i] - (1 if i < _SHARED_ROOT else 0)
        base = f"http://seed-d{i:03d}.example.com/static"
        for m in range(uniques):
            res = _make_resource(base, m, rng, _ROOT_RESOURCE_MIMES)
            root_resources.append(res)
            root_pool.append(res.uri)

        b = breadths[i]
        contributing_l1 = set(rng.sample(range(b), contrib1[i]))
        root_events = []
        l1_keys = []
        for j in range(b):
            kind = _pick(_DEFERRED_KINDS, rng)[0]
            root_events.append((f"e{j}", kind))
            l1_keys.append(f"e{j}:{kind}")

        l2_total = l2_counts.get(i, 0)
        l2_parents = sorted(rng.randrange(b) for _ in range(l2_total))
        contributing_l2 = set(rng.sample(range(l2_total), contrib2_by_seed.get(i, 0)))
        l2_events_by_parent: dict[int, list[tuple[str, str]]] = {}
        l2_nodes: list[tuple[int, str, str]] = []  # (parent j, target, kind)
        for local, parent_j in enumerate(l2_parents):
            kind = _pick(_DEFERRED_KINDS, rng)[0]
            target = f"x{local}"
            l2_events_by_parent.setdefault(parent_j, []).append((target, kind))
            l2_nodes.append((parent_j, target, kind))

        states[""] = FixtureState(
            resources=tuple(root_resources), events=tuple(root_events)
        )
        for j, key in enumerate(l1_keys):
            resources: list[FixtureResource] = []
            if j in contributing_l1:
                for uri in popular_by_slot.get(l1_slot, ()):
                    resources.append(_popular_resource(uri))
                quota = l1_quotas[l1_slot]
                fill_base = f"http://a{l1_slot:04d}.frontier.example.net/l1"
                for m in range(quota):
                    res = _make_resource(fill_base, m, rng, _NEW_RESOURCE_MIMES)
                    resources.append(res)
                    l1_pool.append(res.uri)
                l1_slot += 1
            states[key] = FixtureState(
                resources=tuple(resources),
                events=tuple(l2_events_by_parent.get(j, ())),
            )
        for local, (parent_j, target, kind) in enumerate(l2_nodes):
            key = f"{l1_keys[parent_j]}/{target}:{kind}"
            resources = []
            if local in contributing_l2:
                quota = l2_quotas[l2_slot]
                fill_base = f"http://b{l2_slot:04d}.frontier.example.net/l2"
                for m in range(quota):
                    res = _make_resource(fill_base, m, rng, _NEW_RESOURCE_MIMES)
                    resources.append(res)
                    l2_pool.append(res.uri)
                l2_slot += 1
            states[key] = FixtureState(resources=tuple(resources), events=())

        fixture = SiteFixture(seed=seed_uri, states=states)
        name = f"d{i:03d}.json"
        fixture.save(fixture_dir / name)
        index.append({"uri": seed_uri, "file": name, "generated_as": "deferred"})

    for i in range(_N_SEEDS):
        seed_uri = f"http://seed-n{i:03d}.example.com/page"
        root_resources = []
        if i < _SHARED_ROOT:
            root_resources.append(
                FixtureResource(
                    uri=shared[i], mime="application/javascript", size=9_500
                )
            )
        uniques = n_root_quotas[i] - (1 if i < _SHARED_ROOT else 0)
        base = f"http://seed-n{i:03d}.example.com/static"
        for m in range(uniques):
            res = _make_resource(base, m, rng, _ROOT_RESOURCE_MIMES)
            root_resources.append(res)
            root_pool.append(res.uri)
        b = n_breadths[i]
        events = []
        states = {}
        for j in range(b):
            kind = _pick(_NONDEFERRED_KINDS, rng)[0]
            events.append((f"e{j}", kind))
        states[""] = FixtureState(
            resources=tuple(root_resources), events=tuple(events)
        )
        for target, kind in events:
            states[f"{target}:{kind}"] = FixtureState(resources=(), events=())
        fixture = SiteFixture(seed=seed_uri, states=states)
        name = f"n{i:03d}.json"
        fixture.save(fixture_dir / name)
        index.append({"uri": seed_uri, "file": name, "generated_as": "nondeferred"})

    _write_corpus_listing(fixture_dir, index)

    holdings_file = out / "holdings.txt"
    _write_reference_holdings(
        holdings_file, rng, {0: root_pool, 1: l1_pool, 2: l2_pool}
    )

    expected_file = out / "expected.json"
    expected_file.write_text(
        json.dumps(
            {
                "totals": {
                    **{
                        k: v
                        for k, v in REFERENCE_TOTALS.items()
                        if k not in ("level_contributions", "unarchived_fractions")
                    },
                    "level_contributions": {
                        str(k): v
                        for k, v in REFERENCE_TOTALS["level_contributions"].items()
                    },
                    "unarchived_fractions": {
                        str(k): v
                        for k, v in REFERENCE_TOTALS["unarchived_fractions"].items()
                    },
                },
                "popular": [
                    {"uri": uri, "occurrences": count}
                    for uri, count in REFERENCE_POPULAR
                ],
                "rng_seed": rng_seed,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return ReferenceCorpus(
        root=out,
        fixture_dir=fixture_dir,
        seeds_file=fixture_dir / "seeds.txt",
        holdings_file=holdings_file,
        expected_file=expected_file,
    )


def _write_reference_holdings(
    path: Path, rng: random.Random, pools: dict[int, list[str]]
) -> None:
    lines = []
    for level, pool in sorted(pools.items()):
        if len(set(pool)) != len(pool):
            raise AssertionError(f"level {level} pool has duplicate URIs")
        unarchived = set(rng.sample(pool, _UNARCHIVED[level]))
        for uri in sorted(pool):
            if uri not in unarchived:
                lines.append(f"{uri} {rng.randint(1, 5)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
