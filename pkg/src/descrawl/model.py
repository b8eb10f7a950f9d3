"""Value types for client-side state trees and embedded-resource sets.

A dereferenced page is the root of a tree of client-side states: each
interaction (a DOM event fired on a target element) transitions to a child
state, and each state carries the cumulative set of embedded resources
requested since load. States are compared by their resource sets, and
interaction scripts by their exact event sequences. Everything here is an
immutable value with no I/O; the driver, crawler and analysis layers build
on top.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator
from urllib.parse import urlsplit, urlunsplit

# Query keys stripped during canonicalization unless the caller overrides
# them. Matched case-insensitively against the whole (raw) key.
DEFAULT_SESSION_PATTERNS: tuple[str, ...] = (
    "sessionid",
    "sid",
    "kdntuid",
    "s",
    "a",
    "it",
)

# Event names with first-class buckets; anything else is grouped as "other"
# for reporting but keeps its own name for identity.
KNOWN_EVENT_KINDS: frozenset[str] = frozenset(
    {
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
    }
)

OTHER_KIND = "other"

# Targets and kinds are embedded in "target:kind" tokens, "/"-joined script
# keys and comma-joined CSV scripts, so those separators are forbidden.
_TOKEN_SAFE = re.compile(r"[^:/,\s]+\Z")


class CanonicalizationError(ValueError):
    """A URI could not be parsed as an absolute http(s)-style URI."""


@lru_cache(maxsize=None)
def _compiled_patterns(patterns: tuple[str, ...]) -> tuple[re.Pattern[str], ...]:
    return tuple(re.compile(p, re.IGNORECASE) for p in patterns)


def _lowercase_host(netloc: str) -> str:
    # Lowercase only the host; userinfo and port are kept verbatim.
    userinfo, sep, hostport = netloc.rpartition("@")
    if hostport.startswith("["):
        close = hostport.find("]")
        if close == -1:
            host, rest = hostport, ""
        else:
            host, rest = hostport[: close + 1], hostport[close + 1 :]
    else:
        host, colon, port = hostport.partition(":")
        rest = colon + port
    return userinfo + sep + host.lower() + rest


def _strip_session_keys(query: str, patterns: tuple[re.Pattern[str], ...]) -> str:
    # Tokens are kept verbatim (no percent-decoding) so repeated
    # canonicalization can never rewrite them; only matched keys drop out.
    if not query:
        return ""
    kept = []
    for token in query.split("&"):
        key = token.split("=", 1)[0]
        if any(p.fullmatch(key) for p in patterns):
            continue
        kept.append(token)
    return "&".join(kept)


@lru_cache(maxsize=262_144)
def _canonical(raw: str, patterns: tuple[str, ...]) -> str:
    try:
        parts = urlsplit(raw)
    except ValueError as exc:
        raise CanonicalizationError(f"malformed URI {raw!r}: {exc}") from None
    if not parts.scheme or not parts.netloc:
        raise CanonicalizationError(f"not an absolute URI: {raw!r}")
    query = _strip_session_keys(parts.query, _compiled_patterns(patterns))
    return urlunsplit(
        (parts.scheme.lower(), _lowercase_host(parts.netloc), parts.path, query, "")
    )


@dataclass(frozen=True)
class UriR:
    """An original-resource URI together with its canonical (dedup) form."""

    raw: str
    canonical: str

    @classmethod
    def parse(
        cls, raw: str, session_patterns: Iterable[str] = DEFAULT_SESSION_PATTERNS
    ) -> "UriR":
        return cls(raw=raw, canonical=_canonical(raw, tuple(session_patterns)))


def canonicalize(
    raw: str, session_patterns: Iterable[str] = DEFAULT_SESSION_PATTERNS
) -> UriR:
    """Canonicalize an absolute URI.

    Drops the fragment, lowercases scheme and host, and removes query
    parameters whose keys match one of ``session_patterns`` (regexes,
    full-match, case-insensitive). Remaining query parameters keep their
    original order and spelling, so the result is stable under repetition.

    Raises:
        CanonicalizationError: if ``raw`` is not an absolute URI.
    """
    return UriR.parse(raw, session_patterns)


def content_digest(text: str) -> str:
    """SHA-256 hex digest of serialized markup; diagnostic identity only."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EventKind:
    """A client-side event name. Unknown names keep their text but are
    reported under the "other" bucket."""

    name: str

    @classmethod
    def parse(cls, text: str) -> "EventKind":
        name = text.strip().lower()
        if not _TOKEN_SAFE.fullmatch(name):
            raise ValueError(f"invalid event kind {text!r}")
        return cls(name)

    @property
    def bucket(self) -> str:
        return self.name if self.name in KNOWN_EVENT_KINDS else OTHER_KIND


@dataclass(frozen=True)
class InteractionEvent:
    """One client-side event: a kind fired on a stable element identifier."""

    target: str
    kind: EventKind

    def __post_init__(self) -> None:
        if not _TOKEN_SAFE.fullmatch(self.target):
            raise ValueError(f"invalid event target {self.target!r}")

    def token(self) -> str:
        return f"{self.target}:{self.kind.name}"

    @classmethod
    def from_token(cls, token: str) -> "InteractionEvent":
        target, sep, kind = token.partition(":")
        if not sep or not target or not kind:
            raise ValueError(f"invalid event token {token!r}")
        return cls(target=target, kind=EventKind.parse(kind))


@dataclass(frozen=True)
class InteractionScript:
    """An ordered event sequence; the empty script denotes the root state."""

    events: tuple[InteractionEvent, ...] = ()

    def __len__(self) -> int:
        return len(self.events)

    def extend(self, event: InteractionEvent) -> "InteractionScript":
        return InteractionScript(self.events + (event,))

    def key(self) -> str:
        """"/"-joined ``target:kind`` tokens; "" for the empty script."""
        return "/".join(e.token() for e in self.events)

    @classmethod
    def from_key(cls, key: str) -> "InteractionScript":
        if key == "":
            return cls()
        return cls(tuple(InteractionEvent.from_token(t) for t in key.split("/")))


EMPTY_SCRIPT = InteractionScript()


def scripts_equivalent(a: InteractionScript, b: InteractionScript) -> bool:
    """True iff both scripts perform identical actions in identical order."""
    return a.events == b.events


@dataclass(frozen=True, eq=False)
class ResourceRef:
    """An embedded resource. Identity is the canonical URI only; MIME type
    and size ride along as advisory metadata."""

    uri: UriR
    mime: str = ""
    size_bytes: int = 0

    def __post_init__(self) -> None:
        if self.size_bytes < 0:
            raise ValueError(f"negative resource size: {self.size_bytes}")

    @property
    def canonical(self) -> str:
        return self.uri.canonical

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ResourceRef):
            return NotImplemented
        return self.canonical == other.canonical

    def __hash__(self) -> int:
        return hash(self.canonical)


class ResourceSet:
    """An unordered set of resources keyed by canonical URI.

    Merging keeps first-seen metadata for a URI. Instances are immutable;
    set operations return new instances. Equality compares key sets only,
    matching resource identity.
    """

    __slots__ = ("_refs",)

    def __init__(self, refs: Iterable[ResourceRef] = ()):
        by_key: dict[str, ResourceRef] = {}
        for ref in refs:
            by_key.setdefault(ref.canonical, ref)
        self._refs = by_key

    def keys(self) -> frozenset[str]:
        return frozenset(self._refs)

    def get(self, canonical: str) -> ResourceRef | None:
        return self._refs.get(canonical)

    def union(self, other: "ResourceSet") -> "ResourceSet":
        merged = dict(self._refs)
        for key, ref in other._refs.items():
            merged.setdefault(key, ref)
        out = ResourceSet.__new__(ResourceSet)
        out._refs = merged
        return out

    def difference(self, other: "ResourceSet") -> "ResourceSet":
        out = ResourceSet.__new__(ResourceSet)
        out._refs = {k: v for k, v in self._refs.items() if k not in other._refs}
        return out

    def intersection(self, other: "ResourceSet") -> "ResourceSet":
        out = ResourceSet.__new__(ResourceSet)
        out._refs = {k: v for k, v in self._refs.items() if k in other._refs}
        return out

    def __contains__(self, item: object) -> bool:
        if isinstance(item, ResourceRef):
            return item.canonical in self._refs
        return item in self._refs

    def __len__(self) -> int:
        return len(self._refs)

    def __bool__(self) -> bool:
        return bool(self._refs)

    def __iter__(self) -> Iterator[ResourceRef]:
        return iter(sorted(self._refs.values(), key=lambda r: r.canonical))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ResourceSet):
            return NotImplemented
        return self._refs.keys() == other._refs.keys()

    def __hash__(self) -> int:
        return hash(frozenset(self._refs))

    def __repr__(self) -> str:
        return f"ResourceSet({sorted(self._refs)!r})"


def states_equivalent(a: "ClientState", b: "ClientState") -> bool:
    """True iff both states require identical unordered resource sets."""
    return a.resources.keys() == b.resources.keys()


def new_resources(parent: ResourceSet, child: ResourceSet) -> ResourceSet:
    """Resources of ``child`` absent from ``parent`` (canonical-URI keys)."""
    return child.difference(parent)


@dataclass(frozen=True)
class ClientState:
    """One client-side state: a tree node at ``level`` reached by ``script``.

    ``resources`` is the cumulative set of embedded resources observed from
    load through the last event of the script. ``dom_digest`` identifies the
    rendered markup for diagnostics; equivalence is resource-set based.
    """

    id: str
    level: int
    script: InteractionScript
    resources: ResourceSet
    dom_digest: str = ""
    available_events: tuple[InteractionEvent, ...] = ()
    skip_reason: str | None = None

    def __post_init__(self) -> None:
        if self.level != len(self.script):
            raise ValueError(
                f"state {self.id!r}: level {self.level} != script length "
                f"{len(self.script)}"
            )
        seen = set()
        for event in self.available_events:
            pair = (event.target, event.kind.name)
            if pair in seen:
                raise ValueError(f"state {self.id!r}: duplicate event {pair}")
            seen.add(pair)


@dataclass(frozen=True)
class StatePath:
    """A root-to-state path with its cumulative resource set."""

    states: tuple[ClientState, ...]
    cumulative: ResourceSet

    @classmethod
    def from_states(cls, states: Iterable[ClientState]) -> "StatePath":
        chain = tuple(states)
        if not chain:
            raise ValueError("a path needs at least one state")
        if chain[0].level != 0:
            raise ValueError("a path must start at a level-0 state")
        for prev, cur in zip(chain, chain[1:]):
            if cur.level != prev.level + 1:
                raise ValueError("path states must descend one level at a time")
        cumulative = ResourceSet()
        for state in chain:
            cumulative = cumulative.union(state.resources)
        return cls(states=chain, cumulative=cumulative)

    @property
    def terminal(self) -> ClientState:
        return self.states[-1]


def path_resources(path: StatePath) -> ResourceSet:
    """Union of the resource sets of every state along the path."""
    if not path.states:
        raise ValueError("empty path")
    total = ResourceSet()
    for state in path.states:
        total = total.union(state.resources)
    return total


class StateTree:
    """The tree of client-side states for one seed.

    Nodes are stored in discovery (depth-first) order; every non-root node
    has exactly one parent edge labelled with the event that reached it.
    Treat instances as immutable once built.
    """

    def __init__(
        self,
        seed: UriR,
        nodes: dict[str, ClientState],
        parents: dict[str, tuple[str, InteractionEvent]],
        breaches: tuple[str, ...] = (),
    ):
        self.seed = seed
        self.nodes = nodes
        self.parents = parents
        self.breaches = breaches
        self._children: dict[str, list[str]] = {nid: [] for nid in nodes}
        for child, (parent, _event) in parents.items():
            self._children[parent].append(child)
        roots = [nid for nid in nodes if nid not in parents]
        if len(roots) != 1:
            raise ValueError(f"tree must have exactly one root, found {roots}")
        self.root_id = roots[0]

    @property
    def root(self) -> ClientState:
        return self.nodes[self.root_id]

    def children(self, node_id: str) -> list[str]:
        return list(self._children[node_id])

    def edges(self) -> Iterator[tuple[str, InteractionEvent, str]]:
        for child, (parent, event) in self.parents.items():
            yield parent, event, child

    def parent_of(self, node_id: str) -> ClientState | None:
        entry = self.parents.get(node_id)
        return self.nodes[entry[0]] if entry else None

    def path_states(self, node_id: str) -> list[ClientState]:
        chain = []
        current: str | None = node_id
        while current is not None:
            chain.append(self.nodes[current])
            entry = self.parents.get(current)
            current = entry[0] if entry else None
        chain.reverse()
        return chain

    def path(self, node_id: str) -> StatePath:
        return StatePath.from_states(self.path_states(node_id))

    @property
    def descendant_count(self) -> int:
        return len(self.nodes) - 1

    @property
    def max_level(self) -> int:
        return max(state.level for state in self.nodes.values())

    def validate_structure(self) -> None:
        """Audit the whole tree: levels, scripts and edges must agree."""
        root = self.root
        if root.level != 0 or len(root.script) != 0:
            raise ValueError("root must be at level 0 with an empty script")
        for node_id, state in self.nodes.items():
            if state.level != len(state.script):
                raise ValueError(f"node {node_id!r}: level != script length")
            entry = self.parents.get(node_id)
            if entry is None:
                continue
            parent_id, event = entry
            parent = self.nodes[parent_id]
            if state.script != parent.script.extend(event):
                raise ValueError(
                    f"node {node_id!r}: script does not extend parent "
                    f"{parent_id!r} by its edge event"
                )
            if state.level != parent.level + 1:
                raise ValueError(f"node {node_id!r}: level != parent level + 1")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateTree):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.nodes == other.nodes
            and self.parents == other.parents
            and self.breaches == other.breaches
        )
