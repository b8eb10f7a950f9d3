import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from descrawl.model import (
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

from .conftest import R


# -- canonicalization ----------------------------------------------------------


def test_fragment_removed():
    assert canonicalize("http://a.com/p#frag").canonical == "http://a.com/p"


def test_scheme_host_lowercased_query_kept():
    assert canonicalize("HTTP://A.com/p?x=1").canonical == "http://a.com/p?x=1"


def test_ad_server_fragment_and_default_patterns():
    raw = "http://ads.pubmatic.com/AdServer/js/showad.js#PIX&kdntuid=1&p=52041"
    assert (
        canonicalize(raw).canonical == "http://ads.pubmatic.com/AdServer/js/showad.js"
    )


def test_session_keys_stripped_order_preserved():
    raw = "http://a.com/p?x=1&sessionid=99&y=2&SID=3&s=0&it=9"
    assert canonicalize(raw).canonical == "http://a.com/p?x=1&y=2"


def test_session_pattern_is_full_match_not_prefix():
    # "a" must not swallow "async"; "s" must not swallow "size".
    raw = "http://a.com/load.js?async=true&size=4"
    assert canonicalize(raw).canonical == raw


def test_custom_patterns():
    raw = "http://a.com/p?token=x&y=2"
    assert canonicalize(raw, ["token"]).canonical == "http://a.com/p?y=2"


def test_query_emptied_entirely():
    assert canonicalize("http://a.com/p?sid=1").canonical == "http://a.com/p"


def test_path_case_preserved():
    assert (
        canonicalize("http://A.com/CaseSensitive/Path").canonical
        == "http://a.com/CaseSensitive/Path"
    )


def test_port_and_userinfo_kept():
    assert (
        canonicalize("http://User:Pw@A.com:8080/p").canonical
        == "http://User:Pw@a.com:8080/p"
    )


@pytest.mark.parametrize(
    "bad", ["not a uri", "/relative/path", "a.com/p", "http://", "mailto:x@y"]
)
def test_malformed_uri_raises_and_names_input(bad):
    with pytest.raises(CanonicalizationError) as err:
        canonicalize(bad)
    assert repr(bad) in str(err.value) or bad in str(err.value)


def test_canonicalize_idempotent_examples():
    for raw in [
        "HTTPS://Example.COM:443/A/b?q=1&sid=2#x",
        "http://a.com/p?x=%20&&y",
        "http://a.com",
        "http://[2001:DB8::1]:8080/p#f",
    ]:
        once = canonicalize(raw).canonical
        assert canonicalize(once).canonical == once


_scheme = st.sampled_from(["http", "HTTP", "https", "HtTpS"])
_host = st.from_regex(r"[A-Za-z0-9]([A-Za-z0-9-]{0,10}[A-Za-z0-9])?", fullmatch=True)
_path_seg = st.from_regex(r"[A-Za-z0-9._~%-]{0,8}", fullmatch=True)
_qkey = st.sampled_from(["x", "y", "q", "sessionid", "sid", "s", "a", "it", "async"])
_qval = st.from_regex(r"[A-Za-z0-9%+_-]{0,6}", fullmatch=True)


@st.composite
def _uris(draw):
    scheme = draw(_scheme)
    host = draw(_host) + "." + draw(st.sampled_from(["com", "org", "net"]))
    path = "/" + "/".join(draw(st.lists(_path_seg, max_size=3)))
    params = draw(st.lists(st.tuples(_qkey, _qval), max_size=4))
    query = "&".join(f"{k}={v}" if v else k for k, v in params)
    fragment = draw(st.sampled_from(["", "#frag", "#a=1&b=2"]))
    return f"{scheme}://{host}{path}" + (f"?{query}" if query else "") + fragment


@settings(max_examples=200)
@given(_uris())
def test_canonicalize_properties(raw):
    uri = canonicalize(raw)
    assert "#" not in uri.canonical
    assert canonicalize(uri.canonical).canonical == uri.canonical
    if "?" in uri.canonical:
        query = uri.canonical.split("?", 1)[1]
        keys = {token.split("=", 1)[0].lower() for token in query.split("&")}
        assert not (keys & {"sessionid", "sid", "s", "a", "it", "kdntuid"})


# -- events and scripts ---------------------------------------------------------


def test_event_kind_buckets():
    assert EventKind.parse("Click").bucket == "click"
    assert EventKind.parse("touchstart").bucket == "other"
    assert EventKind.parse("touchstart").name == "touchstart"


def test_event_token_round_trip():
    event = InteractionEvent(target="m1", kind=EventKind.parse("click"))
    assert event.token() == "m1:click"
    assert InteractionEvent.from_token("m1:click") == event


def test_bad_targets_rejected():
    for target in ["", "a b", "a/b", "a:b", "a,b"]:
        with pytest.raises(ValueError):
            InteractionEvent(target=target, kind=EventKind.parse("click"))


def test_script_key_round_trip():
    script = InteractionScript.from_key("m1:click/m2:mouseover")
    assert script.key() == "m1:click/m2:mouseover"
    assert len(script) == 2
    assert InteractionScript.from_key("") == InteractionScript()


def test_scripts_equivalent_empty_and_order():
    empty = InteractionScript()
    assert scripts_equivalent(empty, InteractionScript())
    ab = InteractionScript.from_key("a:click/b:click")
    ba = InteractionScript.from_key("b:click/a:click")
    assert not scripts_equivalent(ab, ba)
    assert scripts_equivalent(ab, InteractionScript.from_key("a:click/b:click"))


@given(st.lists(st.sampled_from(["a:click", "b:blur", "c:mouseover"]), max_size=4))
def test_scripts_equivalence_relation(tokens):
    script = InteractionScript(
        tuple(InteractionEvent.from_token(t) for t in tokens)
    )
    clone = InteractionScript.from_key(script.key())
    assert scripts_equivalent(script, script)
    assert scripts_equivalent(script, clone) == scripts_equivalent(clone, script)


# -- resource sets ---------------------------------------------------------------


def test_resource_identity_is_canonical_uri_only():
    a = ResourceRef(uri=UriR.parse("http://a.com/x#f"), mime="text/css", size_bytes=10)
    b = ResourceRef(uri=UriR.parse("http://a.com/x"), mime="image/png", size_bytes=99)
    assert a == b and hash(a) == hash(b)


def test_resource_set_merges_keep_first_metadata():
    first = ResourceRef(uri=UriR.parse("http://a.com/x"), mime="text/css", size_bytes=1)
    second = ResourceRef(uri=UriR.parse("http://a.com/x"), mime="image/png", size_bytes=2)
    merged = ResourceSet([first, second])
    assert len(merged) == 1
    assert merged.get("http://a.com/x").mime == "text/css"


def test_negative_size_rejected():
    with pytest.raises(ValueError):
        ResourceRef(uri=UriR.parse("http://a.com/x"), size_bytes=-1)


def test_states_equivalent_examples():
    sets = {"xy": R("http://h/x", "http://h/y"), "yx": R("http://h/y", "http://h/x")}
    s1 = ClientState(id="a", level=0, script=InteractionScript(), resources=sets["xy"])
    s2 = ClientState(id="b", level=0, script=InteractionScript(), resources=sets["yx"])
    s3 = ClientState(
        id="c",
        level=0,
        script=InteractionScript(),
        resources=R("http://h/x", "http://h/z"),
    )
    assert states_equivalent(s1, s2)
    assert not states_equivalent(s1, s3)


_key_sets = st.sets(st.sampled_from([f"http://h/{c}" for c in "abcdef"]), max_size=6)


@given(_key_sets, _key_sets, _key_sets)
def test_states_equivalence_relation(ka, kb, kc):
    def state(name, keys):
        return ClientState(
            id=name, level=0, script=InteractionScript(), resources=R(*keys)
        )

    a, b, c = state("a", ka), state("b", kb), state("c", kc)
    assert states_equivalent(a, a)
    assert states_equivalent(a, b) == states_equivalent(b, a)
    if states_equivalent(a, b) and states_equivalent(b, c):
        assert states_equivalent(a, c)


@given(_key_sets, _key_sets)
def test_new_resources_identities(parent_keys, child_keys):
    parent, child = R(*parent_keys), R(*child_keys)
    new = new_resources(parent, child)
    assert not new.intersection(parent)
    assert new.union(child.intersection(parent)) == child


def test_new_resources_examples():
    parent = R("http://h/a", "http://h/b")
    assert len(new_resources(parent, parent)) == 0
    result = new_resources(R("http://h/a"), R("http://h/a", "http://h/b", "http://h/c"))
    assert result.keys() == {"http://h/b", "http://h/c"}


# -- paths -----------------------------------------------------------------------


def _chain(*resource_sets):
    states = []
    script = InteractionScript()
    for level, resources in enumerate(resource_sets):
        if level:
            script = script.extend(
                InteractionEvent(target=f"t{level}", kind=EventKind.parse("click"))
            )
        states.append(
            ClientState(
                id=f"s{level}", level=level, script=script, resources=resources
            )
        )
    return StatePath.from_states(states)


def test_path_resources_single_state():
    path = _chain(R("http://h/a", "http://h/b"))
    assert path_resources(path).keys() == {"http://h/a", "http://h/b"}


def test_path_resources_union_absorbs_duplicates():
    path = _chain(
        R("http://h/a"), R("http://h/a", "http://h/b"), R("http://h/c")
    )
    assert path_resources(path).keys() == {"http://h/a", "http://h/b", "http://h/c"}
    assert path.cumulative == path_resources(path)


def test_path_must_start_at_level_zero():
    state = ClientState(
        id="s1",
        level=1,
        script=InteractionScript.from_key("a:click"),
        resources=R(),
    )
    with pytest.raises(ValueError):
        StatePath.from_states([state])


def test_path_monotone_under_extension():
    rng = random.Random(5)
    pool = [f"http://h/{i}" for i in range(12)]
    sets = [R(*rng.sample(pool, rng.randint(0, 6))) for _ in range(5)]
    cumulative_sizes = []
    for depth in range(1, 6):
        path = _chain(*sets[:depth])
        cumulative_sizes.append(path_resources(path).keys())
    for shorter, longer in zip(cumulative_sizes, cumulative_sizes[1:]):
        assert shorter <= longer


# -- trees ------------------------------------------------------------------------


def _tiny_tree():
    root = ClientState(
        id="s0", level=0, script=InteractionScript(), resources=R("http://h/a")
    )
    event = InteractionEvent.from_token("m:click")
    child = ClientState(
        id="s1",
        level=1,
        script=InteractionScript((event,)),
        resources=R("http://h/a", "http://h/b"),
    )
    return StateTree(
        seed=UriR.parse("http://h/page"),
        nodes={"s0": root, "s1": child},
        parents={"s1": ("s0", event)},
    )


def test_tree_structure_audit_passes():
    tree = _tiny_tree()
    tree.validate_structure()
    assert tree.descendant_count == 1
    assert tree.max_level == 1
    assert [s.id for s in tree.path_states("s1")] == ["s0", "s1"]


def test_tree_structure_audit_catches_bad_script():
    root = ClientState(
        id="s0", level=0, script=InteractionScript(), resources=R()
    )
    wrong_event = InteractionEvent.from_token("other:blur")
    child = ClientState(
        id="s1",
        level=1,
        script=InteractionScript((InteractionEvent.from_token("m:click"),)),
        resources=R(),
    )
    tree = StateTree(
        seed=UriR.parse("http://h/page"),
        nodes={"s0": root, "s1": child},
        parents={"s1": ("s0", wrong_event)},
    )
    with pytest.raises(ValueError, match="does not extend"):
        tree.validate_structure()


def test_level_must_match_script_length():
    with pytest.raises(ValueError):
        ClientState(
            id="bad",
            level=2,
            script=InteractionScript.from_key("a:click"),
            resources=R(),
        )


def test_sum_of_new_resources_matches_rp_over_random_tree(rng):
    # Over a ~40-node random tree, the per-path sum of |new| must equal
    # |path cumulative| - |root| for every root-to-leaf path.
    from descrawl.crawler import build_tree
    from descrawl.driver import SimulatedDriver
    from descrawl.fixtures import random_fixture

    fixture = random_fixture(
        rng, "http://rand.example.org/page", max_breadth=3, max_depth=3, max_states=40
    )
    tree = build_tree(fixture.seed, SimulatedDriver(fixture))
    tree.validate_structure()
    leaves = [nid for nid in tree.nodes if not tree.children(nid)]
    for leaf in leaves:
        states = tree.path_states(leaf)
        total_new = 0
        for parent, child in zip(states, states[1:]):
            total_new += len(new_resources(parent.resources, child.resources))
        path = tree.path(leaf)
        assert total_new == len(path.cumulative) - len(states[0].resources)
