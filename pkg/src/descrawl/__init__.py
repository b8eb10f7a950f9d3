"""descrawl: discover, simulate and cost out client-side descendant states.

The package models pages as finite state machines whose transitions are
client-side events, crawls them exhaustively against deterministic site
fixtures, analyzes the embedded-resource frontier the states require, audits
archival coverage via Memento TimeMaps, and projects crawl-time and storage
costs for different crawl policies.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    DEFAULT_SESSION_PATTERNS,
    CanonicalizationError,
    ClientState,
    EventKind,
    InteractionEvent,
    InteractionScript,
    ResourceRef,
    ResourceSet,
    StatePath,
    StateTree,
    UriR,
    canonicalize,
    new_resources,
    path_resources,
    scripts_equivalent,
    states_equivalent,
)
