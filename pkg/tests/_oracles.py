"""Brute-force oracles over serialized tree dicts.

These operate on the plain JSON dump structure with python sets and loops,
independently of the analysis implementation, so disagreements point at
real defects rather than shared bugs.
"""

from collections import Counter


def walk_tree(tree_dict):
    """Naive full walk: recompute per-node new sets from scratch.

    Returns a dict with rp_total (set), contributing node ids, per-level new
    (dict level -> set), occurrence counter, and per-node new sets.
    """
    nodes = {entry["id"]: entry for entry in tree_dict["nodes"]}
    resources = {
        node_id: {r["canonical"] for r in entry["resources"]}
        for node_id, entry in nodes.items()
    }
    rp_total = set()
    for uris in resources.values():
        rp_total |= uris
    contributing = []
    per_level_new = {}
    occurrences = Counter()
    new_by_node = {}
    for node_id, entry in nodes.items():
        if entry["parent"] is None:
            continue
        new = resources[node_id] - resources[entry["parent"]]
        new_by_node[node_id] = new
        if new:
            contributing.append(node_id)
            per_level_new.setdefault(entry["level"], set()).update(new)
            for uri in new:
                occurrences[uri] += 1
    root_id = next(e["id"] for e in tree_dict["nodes"] if e["parent"] is None)
    return {
        "rp_total": rp_total,
        "root": resources[root_id],
        "contributing": contributing,
        "per_level_new": per_level_new,
        "occurrences": occurrences,
        "new_by_node": new_by_node,
        "descendants": len(nodes) - 1,
    }


def corpus_level_contributions(tree_dicts):
    """Cumulative global dedup per level, recomputed naively."""
    roots = set()
    for tree in tree_dicts:
        root_id = next(e["id"] for e in tree["nodes"] if e["parent"] is None)
        roots |= {
            r["canonical"]
            for e in tree["nodes"]
            if e["id"] == root_id
            for r in e["resources"]
        }
    max_level = max(e["level"] for tree in tree_dicts for e in tree["nodes"])
    cumulative = {0: set(roots)}
    for level in range(1, max_level + 1):
        cumulative[level] = set(cumulative[level - 1])
    for tree in tree_dicts:
        for entry in tree["nodes"]:
            if entry["level"] == 0:
                continue
            uris = {r["canonical"] for r in entry["resources"]}
            for level in range(entry["level"], max_level + 1):
                cumulative[level] |= uris
    return {level: len(uris) for level, uris in cumulative.items()}


def corpus_occurrences(tree_dicts):
    total = Counter()
    for tree in tree_dicts:
        total.update(walk_tree(tree)["occurrences"])
    return total


def ranking(counter, k):
    return sorted(counter.items(), key=lambda item: (-item[1], item[0]))[:k]
