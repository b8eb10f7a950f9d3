"""Page drivers: dereference a seed, enumerate events, execute interactions.

The production role (headless browser plus an event-listener inspector) is
abstracted behind :class:`PageDriver`. The only built implementation is
:class:`SimulatedDriver`, which replays declarative JSON site fixtures
deterministically: a fixture keys every reachable state by its interaction
script, so "same interactions, same state" holds by construction.

Fixture file format::

    {"seed": "<uri>",
     "states": {"<script-key>": {"resources": [{"uri":..., "mime":..., "size":...}],
                                 "events": [{"target":..., "kind":...}]}}}

where a script key is "/"-joined ``target:kind`` tokens and "" names the
root state with its on-load requests.
"""

from __future__ import annotations

import hashlib
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .model import (
    DEFAULT_SESSION_PATTERNS,
    InteractionEvent,
    InteractionScript,
    ResourceRef,
    ResourceSet,
    UriR,
)

DEFAULT_MARKUP_BYTES = 14_300


class FixtureFormatError(ValueError):
    """A site fixture violates its structural invariants."""


class UnknownSeedError(LookupError):
    """The driver has no page for the requested seed URI."""


class UnreachableStateError(LookupError):
    """An interaction script walks off the fixture's state space."""

    def __init__(self, message: str, missing_prefix: str):
        super().__init__(message)
        self.missing_prefix = missing_prefix


@dataclass(frozen=True)
class FixtureResource:
    uri: str
    mime: str = ""
    size: int = 0


@dataclass(frozen=True)
class FixtureState:
    """Requests made on reaching a state, and the events it offers."""

    resources: tuple[FixtureResource, ...] = ()
    events: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class SiteFixture:
    """A declarative page: every client-side state keyed by script."""

    seed: str
    states: Mapping[str, FixtureState]

    def validate(self) -> None:
        if "" not in self.states:
            raise FixtureFormatError(
                f"fixture {self.seed!r}: missing root state (empty script key)"
            )
        for key, state in self.states.items():
            if key:
                tokens = key.split("/")
                for token in tokens:
                    try:
                        InteractionEvent.from_token(token)
                    except ValueError as exc:
                        raise FixtureFormatError(
                            f"fixture {self.seed!r}: bad script key {key!r}: {exc}"
                        ) from None
                parent = "/".join(tokens[:-1])
                if parent not in self.states:
                    raise FixtureFormatError(
                        f"fixture {self.seed!r}: state {key!r} does not extend "
                        f"an existing state (missing {parent!r})"
                    )
            seen = set()
            for target, kind in state.events:
                try:
                    event = InteractionEvent.from_token(f"{target}:{kind}")
                except ValueError as exc:
                    raise FixtureFormatError(
                        f"fixture {self.seed!r}: state {key!r}: {exc}"
                    ) from None
                pair = (event.target, event.kind.name)
                if pair in seen:
                    raise FixtureFormatError(
                        f"fixture {self.seed!r}: state {key!r}: duplicate event "
                        f"{target}:{kind}"
                    )
                seen.add(pair)
            for res in state.resources:
                if not res.uri:
                    raise FixtureFormatError(
                        f"fixture {self.seed!r}: state {key!r}: empty resource URI"
                    )
                if res.size < 0:
                    raise FixtureFormatError(
                        f"fixture {self.seed!r}: state {key!r}: negative size for "
                        f"{res.uri!r}"
                    )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "states": {
                key: {
                    "resources": [
                        {"uri": r.uri, "mime": r.mime, "size": r.size}
                        for r in state.resources
                    ],
                    "events": [
                        {"target": target, "kind": kind}
                        for target, kind in state.events
                    ],
                }
                for key, state in self.states.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SiteFixture":
        try:
            seed = data["seed"]
            raw_states = data["states"]
        except (KeyError, TypeError) as exc:
            raise FixtureFormatError(f"fixture document missing {exc}") from None
        states = {}
        for key, body in raw_states.items():
            resources = tuple(
                FixtureResource(
                    uri=entry["uri"],
                    mime=entry.get("mime", ""),
                    size=entry.get("size", 0),
                )
                for entry in body.get("resources", ())
            )
            events = tuple(
                (entry["target"], entry["kind"]) for entry in body.get("events", ())
            )
            states[key] = FixtureState(resources=resources, events=events)
        fixture = cls(seed=seed, states=states)
        fixture.validate()
        return fixture

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SiteFixture":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FixtureFormatError(f"fixture is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SiteFixture":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class PageHandle:
    """A positioned page session: requests observed cumulatively since load."""

    seed: UriR
    current_script: InteractionScript
    observed_requests: ResourceSet
    available_events: tuple[InteractionEvent, ...]


class PageDriver(ABC):
    """Interface for anything that can load a page and fire events on it.

    A live headless-browser implementation plugs in here; only the
    simulator below is built.
    """

    @abstractmethod
    def load(self, seed: str | UriR) -> PageHandle:
        """Dereference the seed and return a handle at the root state."""

    @abstractmethod
    def execute(
        self, handle: PageHandle, script: InteractionScript
    ) -> tuple[PageHandle, ResourceSet]:
        """Replay ``script`` from a fresh load; return the positioned handle
        and the cumulative resource set observed from load through the final
        event."""

    @abstractmethod
    def enumerate_events(self, handle: PageHandle) -> tuple[InteractionEvent, ...]:
        """The interactions available at the handle's state, in stable order."""

    @abstractmethod
    def markup(self, handle: PageHandle) -> str:
        """Serialized rendered markup of the handle's state."""


def synthetic_markup(
    seed: str, script_key: str, resource_count: int, target_bytes: int
) -> str:
    """Deterministic stand-in for rendered DOM, padded to roughly
    ``target_bytes`` so downstream storage figures are meaningful."""
    label = script_key or "root"
    head = (
        f"<html><head><title>{seed} :: {label}</title></head><body>\n"
        f"<p>state {label} loads {resource_count} embedded resources</p>\n"
    )
    tail = "</body></html>\n"
    stamp = hashlib.sha256(f"{seed}|{script_key}".encode("utf-8")).hexdigest()
    filler = f"<!-- {stamp} -->\n"
    lines = []
    size = len(head) + len(tail)
    while size < target_bytes:
        lines.append(filler)
        size += len(filler)
    return head + "".join(lines) + tail


class SimulatedDriver(PageDriver):
    """Deterministic driver over one or more site fixtures.

    A driver instance is a single session per seed: replaying the same
    script always yields identical cumulative resource sets. Every top-level
    ``load``/``execute`` is appended to ``call_log`` as
    ``(canonical seed, script key)`` so crawls can be audited.
    """

    def __init__(
        self,
        fixtures: SiteFixture | Iterable[SiteFixture],
        session_patterns: Iterable[str] = DEFAULT_SESSION_PATTERNS,
        markup_bytes: int = DEFAULT_MARKUP_BYTES,
    ):
        if isinstance(fixtures, SiteFixture):
            fixtures = [fixtures]
        self._patterns = tuple(session_patterns)
        self._markup_bytes = markup_bytes
        self._fixtures: dict[str, SiteFixture] = {}
        self.call_log: list[tuple[str, str]] = []
        self._state_refs: dict[tuple[str, str], tuple[ResourceRef, ...]] = {}
        self._state_events: dict[tuple[str, str], tuple[InteractionEvent, ...]] = {}
        for fixture in fixtures:
            fixture.validate()
            canonical = UriR.parse(fixture.seed, self._patterns).canonical
            self._fixtures[canonical] = fixture

    def _seed_uri(self, seed: str | UriR) -> UriR:
        if isinstance(seed, UriR):
            return seed
        return UriR.parse(seed, self._patterns)

    def _fixture_for(self, seed: UriR) -> SiteFixture:
        fixture = self._fixtures.get(seed.canonical)
        if fixture is None:
            raise UnknownSeedError(f"no fixture for seed {seed.raw!r}")
        return fixture

    def _refs(self, seed: UriR, key: str) -> tuple[ResourceRef, ...]:
        cache_key = (seed.canonical, key)
        cached = self._state_refs.get(cache_key)
        if cached is None:
            fixture = self._fixture_for(seed)
            cached = tuple(
                ResourceRef(
                    uri=UriR.parse(r.uri, self._patterns),
                    mime=r.mime,
                    size_bytes=r.size,
                )
                for r in fixture.states[key].resources
            )
            self._state_refs[cache_key] = cached
        return cached

    def _events(self, seed: UriR, key: str) -> tuple[InteractionEvent, ...]:
        cache_key = (seed.canonical, key)
        cached = self._state_events.get(cache_key)
        if cached is None:
            fixture = self._fixture_for(seed)
            cached = tuple(
                InteractionEvent(target=target, kind=_parse_kind(kind))
                for target, kind in fixture.states[key].events
            )
            self._state_events[cache_key] = cached
        return cached

    def load(self, seed: str | UriR) -> PageHandle:
        uri = self._seed_uri(seed)
        self._fixture_for(uri)
        self.call_log.append((uri.canonical, ""))
        return PageHandle(
            seed=uri,
            current_script=InteractionScript(),
            observed_requests=ResourceSet(self._refs(uri, "")),
            available_events=self._events(uri, ""),
        )

    def execute(
        self, handle: PageHandle, script: InteractionScript
    ) -> tuple[PageHandle, ResourceSet]:
        seed = handle.seed
        fixture = self._fixture_for(seed)
        cumulative = ResourceSet(self._refs(seed, ""))
        key = ""
        for event in script.events:
            key = f"{key}/{event.token()}" if key else event.token()
            if key not in fixture.states:
                raise UnreachableStateError(
                    f"seed {seed.raw!r}: script reaches no fixture state; first "
                    f"missing prefix {key!r}",
                    missing_prefix=key,
                )
            cumulative = cumulative.union(ResourceSet(self._refs(seed, key)))
        self.call_log.append((seed.canonical, script.key()))
        positioned = PageHandle(
            seed=seed,
            current_script=script,
            observed_requests=cumulative,
            available_events=self._events(seed, key),
        )
        return positioned, cumulative

    def enumerate_events(self, handle: PageHandle) -> tuple[InteractionEvent, ...]:
        return handle.available_events

    def markup(self, handle: PageHandle) -> str:
        return synthetic_markup(
            seed=handle.seed.canonical,
            script_key=handle.current_script.key(),
            resource_count=len(handle.observed_requests),
            target_bytes=self._markup_bytes,
        )


def _parse_kind(kind: str):
    from .model import EventKind

    return EventKind.parse(kind)
