"""Exhaustive depth-first crawl of a seed's client-side state tree.

States are discovered by extending interaction scripts one event at a time;
a script-dedup guard ensures no script is executed twice within one crawl.
Guard rails cap depth, per-state event counts, total states, and skip states
whose candidate-interaction frontier explodes (pixel-grid style overlays);
every guard firing is recorded on the tree, never silent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from .driver import PageDriver
from .model import (
    ClientState,
    InteractionEvent,
    InteractionScript,
    ResourceRef,
    ResourceSet,
    StateTree,
    UriR,
    content_digest,
    new_resources,
)


@dataclass(frozen=True)
class CrawlLimits:
    """Guard rails for one seed's crawl."""

    max_depth: int = 3
    max_events_per_state: int = 256
    max_states_per_seed: int = 10_000
    explosion_threshold: int = 10_000

    def __post_init__(self) -> None:
        for name in (
            "max_depth",
            "max_events_per_state",
            "max_states_per_seed",
            "explosion_threshold",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SeedClassification:
    """Whether any single root interaction triggers new resource requests."""

    deferred: bool
    trigger_event: InteractionEvent | None = None

    def __post_init__(self) -> None:
        if self.deferred != (self.trigger_event is not None):
            raise ValueError("trigger_event must be present iff deferred")


def classify(seed: str | UriR, driver: PageDriver) -> SeedClassification:
    """Probe each root event once; deferred means some event adds resources.

    The trigger is the first such event in enumeration order. Load failures
    propagate.
    """
    handle = driver.load(seed)
    root_resources = handle.observed_requests
    for event in driver.enumerate_events(handle):
        _, cumulative = driver.execute(handle, InteractionScript((event,)))
        if new_resources(root_resources, cumulative):
            return SeedClassification(deferred=True, trigger_event=event)
    return SeedClassification(deferred=False)


def interaction_frontier_size(state: ClientState) -> int:
    """Number of candidate one-event extensions from a state."""
    return len(state.available_events)


class _ScriptRegistry:
    """Dedup guard: admits each unique interaction script exactly once."""

    def __init__(self) -> None:
        self._seen: set[str] = set()

    def admit(self, script: InteractionScript) -> bool:
        key = script.key()
        if key in self._seen:
            return False
        self._seen.add(key)
        return True


def _dedupe_events(
    events: Iterable[InteractionEvent],
) -> tuple[InteractionEvent, ...]:
    seen = set()
    out = []
    for event in events:
        pair = (event.target, event.kind.name)
        if pair not in seen:
            seen.add(pair)
            out.append(event)
    return tuple(out)


def build_tree(
    seed: str | UriR, driver: PageDriver, limits: CrawlLimits = CrawlLimits()
) -> StateTree:
    """Build the deduplicated state tree for a seed.

    Traversal is depth-first over each state's event enumeration order, so
    the tree (node ids, ordering, resource sets) is deterministic for a
    fixed driver and limits. Candidate extensions come from the driver's raw
    enumeration; the script registry guarantees each unique script is
    visited once even if the driver proposes an interaction twice.
    """
    root_handle = driver.load(seed)
    nodes: dict[str, ClientState] = {}
    parents: dict[str, tuple[str, InteractionEvent]] = {}
    breaches: list[str] = []
    registry = _ScriptRegistry()
    registry.admit(InteractionScript())
    capped = False

    root_events = driver.enumerate_events(root_handle)
    root = ClientState(
        id="s0",
        level=0,
        script=InteractionScript(),
        resources=root_handle.observed_requests,
        dom_digest=content_digest(driver.markup(root_handle)),
        available_events=_dedupe_events(root_events),
    )
    nodes[root.id] = root

    def extend(state: ClientState, raw_events: tuple[InteractionEvent, ...]) -> None:
        nonlocal capped
        if capped or state.level >= limits.max_depth:
            return
        candidates = raw_events
        if len(candidates) > limits.explosion_threshold:
            nodes[state.id] = replace(
                state,
                skip_reason=(
                    f"interaction frontier of {len(candidates)} exceeds "
                    f"explosion threshold {limits.explosion_threshold}; "
                    f"interactions omitted"
                ),
            )
            return
        if len(candidates) > limits.max_events_per_state:
            breaches.append(
                f"state {state.id}: {len(candidates)} events declared, first "
                f"{limits.max_events_per_state} crawled (max_events_per_state)"
            )
            candidates = candidates[: limits.max_events_per_state]
        for event in candidates:
            script = state.script.extend(event)
            if not registry.admit(script):
                continue
            if len(nodes) >= limits.max_states_per_seed:
                if not capped:
                    breaches.append(
                        f"max_states_per_seed ({limits.max_states_per_seed}) "
                        f"reached; crawl truncated"
                    )
                    capped = True
                return
            handle, cumulative = driver.execute(root_handle, script)
            child_events = driver.enumerate_events(handle)
            child = ClientState(
                id=f"s{len(nodes)}",
                level=state.level + 1,
                script=script,
                resources=cumulative,
                dom_digest=content_digest(driver.markup(handle)),
                available_events=_dedupe_events(child_events),
            )
            nodes[child.id] = child
            parents[child.id] = (state.id, event)
            extend(child, child_events)

    extend(root, root_events)
    return StateTree(
        seed=root_handle.seed,
        nodes=nodes,
        parents=parents,
        breaches=tuple(breaches),
    )


@dataclass(frozen=True)
class CrawlResult:
    """Classification plus state tree for one seed."""

    seed: UriR
    classification: SeedClassification
    tree: StateTree


def crawl_seed(
    seed: str | UriR, driver_factory, limits: CrawlLimits = CrawlLimits()
) -> CrawlResult:
    """Classify then crawl one seed, each in a fresh driver session so the
    crawl's call log stays one-execution-per-script."""
    classification = classify(seed, driver_factory())
    tree = build_tree(seed, driver_factory(), limits)
    return CrawlResult(seed=tree.seed, classification=classification, tree=tree)


# -- serialization -----------------------------------------------------------
#
# Tree dumps hold nodes in discovery order with parent/event edges inline;
# resource lists are sorted by canonical URI. Dumps round-trip losslessly
# and identical trees serialize to identical bytes.


def resource_to_dict(ref: ResourceRef) -> dict:
    return {
        "uri": ref.uri.raw,
        "canonical": ref.uri.canonical,
        "mime": ref.mime,
        "size": ref.size_bytes,
    }


def resource_from_dict(entry: dict) -> ResourceRef:
    return ResourceRef(
        uri=UriR(raw=entry["uri"], canonical=entry["canonical"]),
        mime=entry.get("mime", ""),
        size_bytes=entry.get("size", 0),
    )


def tree_to_dict(tree: StateTree) -> dict:
    node_entries = []
    for node_id, state in tree.nodes.items():
        entry = tree.parents.get(node_id)
        node_entries.append(
            {
                "id": node_id,
                "level": state.level,
                "parent": entry[0] if entry else None,
                "event": entry[1].token() if entry else None,
                "script": state.script.key(),
                "dom_digest": state.dom_digest,
                "skip_reason": state.skip_reason,
                "events": [e.token() for e in state.available_events],
                "resources": [resource_to_dict(r) for r in state.resources],
            }
        )
    return {
        "seed": {"raw": tree.seed.raw, "canonical": tree.seed.canonical},
        "breaches": list(tree.breaches),
        "nodes": node_entries,
    }


def tree_from_dict(data: dict) -> StateTree:
    seed = UriR(raw=data["seed"]["raw"], canonical=data["seed"]["canonical"])
    nodes: dict[str, ClientState] = {}
    parents: dict[str, tuple[str, InteractionEvent]] = {}
    for entry in data["nodes"]:
        state = ClientState(
            id=entry["id"],
            level=entry["level"],
            script=InteractionScript.from_key(entry["script"]),
            resources=ResourceSet(
                resource_from_dict(r) for r in entry["resources"]
            ),
            dom_digest=entry.get("dom_digest", ""),
            available_events=tuple(
                InteractionEvent.from_token(t) for t in entry.get("events", ())
            ),
            skip_reason=entry.get("skip_reason"),
        )
        nodes[state.id] = state
        if entry.get("parent") is not None:
            parents[state.id] = (
                entry["parent"],
                InteractionEvent.from_token(entry["event"]),
            )
    return StateTree(
        seed=seed,
        nodes=nodes,
        parents=parents,
        breaches=tuple(data.get("breaches", ())),
    )


def tree_dumps(tree: StateTree) -> str:
    return json.dumps(tree_to_dict(tree), sort_keys=True, separators=(",", ":"))


def tree_loads(text: str) -> StateTree:
    return tree_from_dict(json.loads(text))


def result_to_dict(result: CrawlResult) -> dict:
    trigger = result.classification.trigger_event
    return {
        "seed": {"raw": result.seed.raw, "canonical": result.seed.canonical},
        "classification": {
            "deferred": result.classification.deferred,
            "trigger_event": trigger.token() if trigger else None,
        },
        "tree": tree_to_dict(result.tree),
    }


def result_from_dict(data: dict) -> CrawlResult:
    cls = data["classification"]
    trigger = cls.get("trigger_event")
    return CrawlResult(
        seed=UriR(raw=data["seed"]["raw"], canonical=data["seed"]["canonical"]),
        classification=SeedClassification(
            deferred=cls["deferred"],
            trigger_event=InteractionEvent.from_token(trigger) if trigger else None,
        ),
        tree=tree_from_dict(data["tree"]),
    )


def save_result(result: CrawlResult, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(result_to_dict(result), sort_keys=True, separators=(",", ":"))
        + "\n",
        encoding="utf-8",
    )


def load_result(path: str | Path) -> CrawlResult:
    return result_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def load_results(directory: str | Path) -> list[CrawlResult]:
    paths = sorted(Path(directory).glob("*.json"))
    return [load_result(p) for p in paths]
