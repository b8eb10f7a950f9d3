"""Memento TimeMap lookups and archival-coverage reporting.

A TimeMap is the link-format list of all archived captures (mementos) of an
original resource. Coverage audits fetch one TimeMap per canonical URI in
the discovered frontier — from a live aggregator endpoint or from a
deterministic in-process mock — and report, per state level, the fraction
of resources with no memento at all.
"""

from __future__ import annotations

import re
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from email.utils import format_datetime, parsedate_to_datetime
from pathlib import Path
from typing import Callable, Iterable, Mapping
from urllib.parse import quote

from .model import ResourceRef, ResourceSet, UriR


class TimeMapParseError(ValueError):
    """Link-format input that cannot be parsed; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class LookupFailedError(RuntimeError):
    """A TimeMap lookup failed after retries; distinct from 'no mementos'."""


@dataclass(frozen=True)
class Memento:
    uri: str
    datetime_raw: str
    datetime: datetime


@dataclass(frozen=True)
class TimeMap:
    original: UriR
    mementos: tuple[Memento, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def memento_count(self) -> int:
        return len(self.mementos)


@dataclass(frozen=True)
class ArchivalStatus:
    uri: UriR
    memento_count: int

    @property
    def archived(self) -> bool:
        return self.memento_count > 0


_PARAM_NAME = re.compile(r"[A-Za-z0-9!#$%&'*+.^_`|~-]+")


def _skip_ws(body: str, pos: int) -> int:
    while pos < len(body) and body[pos] in " \t\r\n":
        pos += 1
    return pos


def _parse_quoted(body: str, pos: int) -> tuple[str, int]:
    # pos points at the opening quote.
    start = pos
    pos += 1
    chunks = []
    while pos < len(body):
        ch = body[pos]
        if ch == "\\" and pos + 1 < len(body):
            chunks.append(body[pos + 1])
            pos += 2
            continue
        if ch == '"':
            return "".join(chunks), pos + 1
        chunks.append(ch)
        pos += 1
    raise TimeMapParseError("unterminated quoted string", start)


def parse_timemap(body: str, original: str | UriR) -> TimeMap:
    """Parse link-format text into a TimeMap.

    Only link-values whose ``rel`` contains the ``memento`` token are kept;
    ``self``/``timegate``/``original`` entries are ignored. A memento link
    with a missing or unparseable ``datetime`` attribute is skipped with a
    recorded warning. Structurally broken input raises
    :class:`TimeMapParseError` with the offending byte offset.
    """
    if isinstance(original, str):
        original = UriR.parse(original)
    mementos: list[Memento] = []
    warnings: list[str] = []
    pos = _skip_ws(body, 0)
    n = len(body)
    while pos < n:
        if body[pos] != "<":
            raise TimeMapParseError(
                f"expected '<' to start a link-value, found {body[pos]!r}", pos
            )
        close = body.find(">", pos)
        if close == -1:
            raise TimeMapParseError("unterminated link target", pos)
        target = body[pos + 1 : close]
        pos = _skip_ws(body, close + 1)
        params: dict[str, str] = {}
        while pos < n and body[pos] == ";":
            pos = _skip_ws(body, pos + 1)
            match = _PARAM_NAME.match(body, pos)
            if not match:
                raise TimeMapParseError("expected a link parameter name", pos)
            name = match.group(0).lower()
            pos = _skip_ws(body, match.end())
            value = ""
            if pos < n and body[pos] == "=":
                pos = _skip_ws(body, pos + 1)
                if pos < n and body[pos] == '"':
                    value, pos = _parse_quoted(body, pos)
                else:
                    end = pos
                    while end < n and body[end] not in ";,":
                        end += 1
                    value = body[pos:end].strip()
                    pos = end
            params.setdefault(name, value)
            pos = _skip_ws(body, pos)
        if pos < n:
            if body[pos] != ",":
                raise TimeMapParseError(
                    f"expected ',' between link-values, found {body[pos]!r}", pos
                )
            pos = _skip_ws(body, pos + 1)
        rel_tokens = params.get("rel", "").lower().split()
        if "memento" not in rel_tokens:
            continue
        datetime_raw = params.get("datetime", "")
        if not datetime_raw:
            warnings.append(f"memento {target!r} skipped: missing datetime")
            continue
        try:
            parsed = parsedate_to_datetime(datetime_raw)
        except (TypeError, ValueError):
            parsed = None
        if parsed is None:
            warnings.append(
                f"memento {target!r} skipped: unparseable datetime {datetime_raw!r}"
            )
            continue
        mementos.append(
            Memento(uri=target, datetime_raw=datetime_raw, datetime=parsed)
        )
    return TimeMap(
        original=original, mementos=tuple(mementos), warnings=tuple(warnings)
    )


def serialize_timemap(timemap: TimeMap) -> str:
    """Render a TimeMap back to link-format (original link first)."""
    lines = [f'<{timemap.original.canonical}>; rel="original"']
    lines.extend(
        f'<{m.uri}>; rel="memento"; datetime="{m.datetime_raw}"'
        for m in timemap.mementos
    )
    return ",\n".join(lines) + "\n"


# -- backends -----------------------------------------------------------------


class MockArchive:
    """Deterministic in-process archive: canonical URI -> memento count.

    Holdings files hold one ``<canonical-uri> <count>`` pair per line;
    blank lines and ``#`` comments are ignored.
    """

    _EPOCH = datetime(2015, 7, 1, tzinfo=timezone.utc)

    def __init__(self, holdings: Mapping[str, int]):
        self._holdings = {uri: int(count) for uri, count in holdings.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "MockArchive":
        holdings: dict[str, int] = {}
        for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1
        ):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                uri, count = line.rsplit(None, 1)
                holdings[uri] = int(count)
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: expected '<uri> <count>', got {line!r}"
                ) from None
        return cls(holdings)

    def to_file(self, path: str | Path) -> None:
        lines = [f"{uri} {count}" for uri, count in sorted(self._holdings.items())]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def get_timemap(self, canonical_uri: str) -> TimeMap:
        count = self._holdings.get(canonical_uri, 0)
        mementos = []
        for i in range(count):
            when = self._EPOCH.replace(year=2010 + (i % 6), month=1 + (i % 12))
            mementos.append(
                Memento(
                    uri=(
                        f"http://archive.example/web/"
                        f"{when.strftime('%Y%m%d%H%M%S')}/{canonical_uri}"
                    ),
                    datetime_raw=format_datetime(when, usegmt=True),
                    datetime=when,
                )
            )
        return TimeMap(original=UriR.parse(canonical_uri), mementos=tuple(mementos))


_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class LiveTimeMapBackend:
    """TimeMap lookups over HTTP with retries, backoff and per-host politeness.

    ``endpoint_template`` contains ``{uri}`` (percent-encoded target) or is
    treated as a prefix. A 404 means the resource has no mementos; retryable
    failures back off exponentially and give up after ``attempts`` tries.
    """

    def __init__(
        self,
        endpoint_template: str,
        session=None,
        attempts: int = 3,
        backoff_base_s: float = 0.5,
        timeout_s: float = 30.0,
        per_host_delay_s: float = 0.2,
        per_host_concurrency: int = 2,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if session is None:
            import requests

            session = requests.Session()
        self._template = endpoint_template
        self._session = session
        self._attempts = attempts
        self._backoff = backoff_base_s
        self._timeout = timeout_s
        self._delay = per_host_delay_s
        self._sleep = sleep
        self._lock = threading.Lock()
        self._host_last: dict[str, float] = {}
        self._host_slots: dict[str, threading.Semaphore] = {}
        self._per_host = per_host_concurrency

    def _endpoint(self, canonical_uri: str) -> str:
        encoded = quote(canonical_uri, safe="")
        if "{uri}" in self._template:
            return self._template.format(uri=encoded)
        return self._template + encoded

    def _host_of(self, url: str) -> str:
        return url.split("/", 3)[2] if "://" in url else url

    def _politeness(self, host: str) -> None:
        with self._lock:
            slot = self._host_slots.setdefault(
                host, threading.Semaphore(self._per_host)
            )
        slot.acquire()
        try:
            while True:
                with self._lock:
                    now = time.monotonic()
                    last = self._host_last.get(host, 0.0)
                    wait = self._delay - (now - last)
                    if wait <= 0:
                        self._host_last[host] = now
                        return
                self._sleep(wait)
        finally:
            slot.release()

    def get_timemap(self, canonical_uri: str) -> TimeMap:
        url = self._endpoint(canonical_uri)
        host = self._host_of(url)
        last_error: Exception | None = None
        for attempt in range(self._attempts):
            if attempt:
                self._sleep(self._backoff * (2 ** (attempt - 1)))
            self._politeness(host)
            try:
                response = self._session.get(url, timeout=self._timeout)
            except Exception as exc:  # connection errors are retryable
                last_error = exc
                continue
            status = getattr(response, "status_code", 0)
            if status == 404:
                return TimeMap(original=UriR.parse(canonical_uri))
            if status in _RETRYABLE_STATUS:
                last_error = LookupFailedError(f"HTTP {status} from {url}")
                continue
            if status != 200:
                raise LookupFailedError(f"HTTP {status} from {url}")
            return parse_timemap(response.text, canonical_uri)
        raise LookupFailedError(
            f"lookup failed after {self._attempts} attempts for {url}: {last_error}"
        )


# -- coverage -----------------------------------------------------------------


@dataclass(frozen=True)
class LevelCoverage:
    level: int
    total: int
    unarchived: int
    failed: int

    @property
    def fraction_unarchived(self) -> float:
        denominator = self.total - self.failed
        return (self.unarchived / denominator) if denominator else 0.0


@dataclass(frozen=True)
class CoverageReport:
    per_level: tuple[LevelCoverage, ...]
    mime_histogram: Mapping[str, int]
    size_series: tuple[tuple[int, float], ...]
    lookup_failures: int

    def fraction_unarchived(self, level: int) -> float:
        for entry in self.per_level:
            if entry.level == level:
                return entry.fraction_unarchived
        raise KeyError(level)


def coverage(
    frontier: Mapping[int, ResourceSet], backend, workers: int = 8
) -> CoverageReport:
    """Audit archival coverage of a per-level resource frontier.

    Each canonical URI is looked up at most once per run even if it appears
    at several levels. Lookup failures are excluded from a level's
    denominator and counted separately; they never masquerade as
    "unarchived".
    """
    all_uris = sorted({ref.canonical for rs in frontier.values() for ref in rs})
    counts: dict[str, int | None] = {}

    def lookup(uri: str) -> tuple[str, int | None]:
        try:
            return uri, backend.get_timemap(uri).memento_count
        except LookupFailedError:
            return uri, None

    if workers > 1 and len(all_uris) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for uri, count in pool.map(lookup, all_uris):
                counts[uri] = count
    else:
        for uri in all_uris:
            counts[uri] = lookup(uri)[1]

    per_level = []
    mime_histogram: Counter[str] = Counter()
    unarchived_sizes: list[int] = []
    failures_total = 0
    for level in sorted(frontier):
        refs = frontier[level]
        failed = sum(1 for ref in refs if counts[ref.canonical] is None)
        unarchived_refs = [ref for ref in refs if counts[ref.canonical] == 0]
        per_level.append(
            LevelCoverage(
                level=level,
                total=len(refs),
                unarchived=len(unarchived_refs),
                failed=failed,
            )
        )
        failures_total += failed
        for ref in unarchived_refs:
            mime_histogram[ref.mime or "unknown"] += 1
            unarchived_sizes.append(ref.size_bytes)

    unarchived_sizes.sort()
    size_series = tuple(
        (size, (index + 1) / len(unarchived_sizes))
        for index, size in enumerate(unarchived_sizes)
    )
    return CoverageReport(
        per_level=tuple(per_level),
        mime_histogram=dict(mime_histogram),
        size_series=size_series,
        lookup_failures=failures_total,
    )


def statuses(
    refs: Iterable[ResourceRef], backend
) -> list[ArchivalStatus]:
    """Per-resource archival status; lookup failures propagate."""
    out = []
    for ref in refs:
        timemap = backend.get_timemap(ref.canonical)
        out.append(ArchivalStatus(uri=ref.uri, memento_count=timemap.memento_count))
    return out
