"""Per-descendant JSON metadata records for WARC sidecar storage.

Each record describes one client-side state: the interaction script that
reaches it (CSV of ``target:kind`` tokens), the cumulative resource URIs it
requires, its rendered markup, and the interactions available from it.
Serialization is canonical (sorted keys, stable list order, compact
separators) so identical inputs always produce byte-identical output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .model import ClientState, InteractionEvent, InteractionScript, StateTree

RECORD_FIELDS = (
    "startedDateTime",
    "id",
    "title",
    "pageTimings",
    "comment",
    "renderedContent",
    "renderedElements",
    "map",
)

DEFAULT_RECORD_TIMESTAMP = "2015-07-01T00:00:00Z"


class StateLookupError(KeyError):
    """The state does not belong to the given tree."""


def _format_timestamp(value: str | datetime) -> str:
    if isinstance(value, datetime):
        return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    datetime.strptime(value, "%Y-%m-%dT%H:%M:%SZ")  # validate
    return value


@dataclass(frozen=True)
class DescendantMetadataRecord:
    startedDateTime: str
    id: str
    title: str
    pageTimings: str
    comment: str
    renderedContent: str
    renderedElements: tuple[str, ...]
    map: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "startedDateTime": self.startedDateTime,
            "id": self.id,
            "title": self.title,
            "pageTimings": self.pageTimings,
            "comment": self.comment,
            "renderedContent": self.renderedContent,
            "renderedElements": list(self.renderedElements),
            "map": list(self.map),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "DescendantMetadataRecord":
        return cls(
            startedDateTime=data["startedDateTime"],
            id=data["id"],
            title=data["title"],
            pageTimings=data["pageTimings"],
            comment=data["comment"],
            renderedContent=data["renderedContent"],
            renderedElements=tuple(data["renderedElements"]),
            map=tuple(data["map"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "DescendantMetadataRecord":
        return cls.from_dict(json.loads(text))

    def script(self) -> InteractionScript:
        """Recover the interaction script from the CSV field."""
        if not self.pageTimings:
            return InteractionScript()
        return InteractionScript(
            tuple(
                InteractionEvent.from_token(token)
                for token in self.pageTimings.split(",")
            )
        )


def emit_record(
    state: ClientState,
    tree: StateTree,
    timestamp: str | datetime = DEFAULT_RECORD_TIMESTAMP,
    rendered_content: str = "",
    comment: str = "",
) -> DescendantMetadataRecord:
    """Build the metadata record for one state of a tree.

    ``renderedElements`` is the cumulative resource frontier along the
    state's unique root path, sorted by canonical URI. ``title`` carries the
    seed URI-R (descendants share it; the state id disambiguates).
    """
    if tree.nodes.get(state.id) != state:
        raise StateLookupError(f"state {state.id!r} is not part of this tree")
    return DescendantMetadataRecord(
        startedDateTime=_format_timestamp(timestamp),
        id=state.id,
        title=tree.seed.canonical,
        pageTimings=",".join(e.token() for e in state.script.events),
        comment=comment,
        renderedContent=rendered_content,
        renderedElements=tuple(ref.canonical for ref in state.resources),
        map=tuple(e.token() for e in state.available_events),
    )


def emit_descendant_records(
    tree: StateTree,
    timestamp: str | datetime = DEFAULT_RECORD_TIMESTAMP,
    content_for: Callable[[ClientState], str] | None = None,
    comment: str = "",
) -> Iterator[DescendantMetadataRecord]:
    """Records for every descendant (non-root) state, in discovery order."""
    for node_id, state in tree.nodes.items():
        if node_id == tree.root_id:
            continue
        yield emit_record(
            state,
            tree,
            timestamp=timestamp,
            rendered_content=content_for(state) if content_for else "",
            comment=comment,
        )


def write_record_stream(
    path: str | Path, records: Iterable[DescendantMetadataRecord]
) -> int:
    """Write newline-delimited records; returns the number written."""
    count = 0
    with Path(path).open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(record.to_json() + "\n")
            count += 1
    return count


def read_record_stream(path: str | Path) -> Iterator[DescendantMetadataRecord]:
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield DescendantMetadataRecord.from_json(line)
