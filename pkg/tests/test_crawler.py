import random

import pytest

from descrawl.crawler import (
    CrawlLimits,
    SeedClassification,
    _ScriptRegistry,
    build_tree,
    classify,
    crawl_seed,
    interaction_frontier_size,
    load_result,
    result_to_dict,
    result_from_dict,
    save_result,
    tree_dumps,
    tree_loads,
)
from descrawl.driver import PageDriver, SimulatedDriver
from descrawl.fixtures import random_fixture
from descrawl.model import EventKind, InteractionEvent, InteractionScript

from .conftest import make_fixture


def test_limits_must_be_positive():
    with pytest.raises(ValueError):
        CrawlLimits(max_depth=0)
    with pytest.raises(ValueError):
        CrawlLimits(explosion_threshold=-1)


def test_classification_invariant():
    with pytest.raises(ValueError):
        SeedClassification(deferred=True, trigger_event=None)
    with pytest.raises(ValueError):
        SeedClassification(
            deferred=False,
            trigger_event=InteractionEvent("a", EventKind.parse("click")),
        )


def test_classify_deferred_with_first_trigger(five_node_fixture, driver_for):
    result = classify("http://five.example.com/page", driver_for(five_node_fixture))
    assert result.deferred
    assert result.trigger_event.token() == "m1:click"


def test_classify_nondeferred_when_events_add_nothing(driver_for):
    fixture = make_fixture(
        "http://inert.example.com/",
        {
            "": (["http://inert.example.com/a.css"], [("m1", "click")]),
            "m1:click": ([], []),
        },
    )
    result = classify("http://inert.example.com/", driver_for(fixture))
    assert not result.deferred
    assert result.trigger_event is None


def test_classify_no_events_is_nondeferred(driver_for):
    fixture = make_fixture(
        "http://leaf.example.com/", {"": (["http://leaf.example.com/a.css"], [])}
    )
    assert not classify("http://leaf.example.com/", driver_for(fixture)).deferred


def test_build_tree_five_nodes_depth_two(five_node_fixture, driver_for):
    tree = build_tree("http://five.example.com/page", driver_for(five_node_fixture))
    assert len(tree.nodes) == 5
    assert tree.max_level == 2
    assert tree.descendant_count == 4
    tree.validate_structure()


def test_build_tree_zero_events(driver_for):
    fixture = make_fixture(
        "http://leaf.example.com/", {"": (["http://leaf.example.com/a.css"], [])}
    )
    tree = build_tree("http://leaf.example.com/", driver_for(fixture))
    assert len(tree.nodes) == 1
    assert tree.max_level == 0


def test_nodes_store_cumulative_resources(five_node_fixture, driver_for):
    tree = build_tree("http://five.example.com/page", driver_for(five_node_fixture))
    level1 = [s for s in tree.nodes.values() if s.level == 1]
    for state in level1:
        assert "http://five.example.com/a.css" in state.resources
        assert len(state.resources) == 2


def test_interaction_frontier_size(five_node_fixture, driver_for):
    tree = build_tree("http://five.example.com/page", driver_for(five_node_fixture))
    assert interaction_frontier_size(tree.root) == 2
    leaf = tree.nodes["s2"]
    assert interaction_frontier_size(leaf) in (0, 1)


def test_depth_limit_respected(menus_fixture, driver_for):
    tree = build_tree(
        "http://menus.example.com/story",
        driver_for(menus_fixture),
        CrawlLimits(max_depth=1),
    )
    assert tree.max_level == 1
    assert all(state.level <= 1 for state in tree.nodes.values())


def test_explosion_guard_marks_state_skipped(driver_for):
    wide_events = [(f"e{i}", "click") for i in range(30)]
    states = {"": ([], wide_events)}
    states.update({f"e{i}:click": ([], []) for i in range(30)})
    fixture = make_fixture("http://explode.example.com/", states)
    tree = build_tree(
        "http://explode.example.com/",
        driver_for(fixture),
        CrawlLimits(explosion_threshold=20),
    )
    assert len(tree.nodes) == 1
    assert "explosion threshold" in tree.root.skip_reason
    assert interaction_frontier_size(tree.root) == 30


def test_event_truncation_recorded_as_breach(driver_for):
    events = [(f"e{i}", "click") for i in range(8)]
    states = {"": ([], events)}
    states.update({f"e{i}:click": ([], []) for i in range(8)})
    fixture = make_fixture("http://wide.example.com/", states)
    tree = build_tree(
        "http://wide.example.com/",
        driver_for(fixture),
        CrawlLimits(max_events_per_state=5),
    )
    assert tree.descendant_count == 5
    assert any("max_events_per_state" in b for b in tree.breaches)


def test_state_cap_recorded_and_respected(driver_for):
    states = {"": ([], [(f"e{i}", "click") for i in range(3)])}
    for i in range(3):
        states[f"e{i}:click"] = ([], [(f"f{i}a", "blur"), (f"f{i}b", "blur")])
        states[f"e{i}:click/f{i}a:blur"] = ([], [])
        states[f"e{i}:click/f{i}b:blur"] = ([], [])
    fixture = make_fixture("http://cap.example.com/", states)
    tree = build_tree(
        "http://cap.example.com/",
        driver_for(fixture),
        CrawlLimits(max_states_per_seed=6),
    )
    assert len(tree.nodes) <= 6
    assert any("max_states_per_seed" in b for b in tree.breaches)


def test_script_registry_rejects_duplicates():
    registry = _ScriptRegistry()
    script = InteractionScript.from_key("a:click")
    assert registry.admit(script)
    assert not registry.admit(InteractionScript.from_key("a:click"))
    assert registry.admit(InteractionScript.from_key("a:click/b:click"))


class _DuplicateEventDriver(PageDriver):
    """Emits the same event twice from the root, proposing one script by
    two routes; only the dedup guard prevents a duplicate state."""

    def __init__(self, inner: SimulatedDriver):
        self.inner = inner

    def load(self, seed):
        return self.inner.load(seed)

    def execute(self, handle, script):
        return self.inner.execute(handle, script)

    def enumerate_events(self, handle):
        events = self.inner.enumerate_events(handle)
        return events + events if handle.current_script.key() == "" else events

    def markup(self, handle):
        return self.inner.markup(handle)


def test_rediscovered_script_keeps_single_node(five_node_fixture, driver_for):
    shady = _DuplicateEventDriver(driver_for(five_node_fixture))
    tree = build_tree("http://five.example.com/page", shady)
    scripts = [state.script.key() for state in tree.nodes.values()]
    assert len(scripts) == len(set(scripts))
    assert len(tree.nodes) == 5


def test_each_unique_script_executed_once(rng):
    for case in range(20):
        fixture = random_fixture(
            random.Random(rng.randint(0, 10**9)),
            f"http://log-{case}.example.org/page",
            max_breadth=3,
            max_depth=3,
        )
        driver = SimulatedDriver(fixture)
        tree = build_tree(fixture.seed, driver, CrawlLimits())
        executed = [key for _, key in driver.call_log]
        assert len(executed) == len(set(executed))
        assert len(executed) == len(tree.nodes)


def test_build_tree_deterministic(menus_fixture, driver_for):
    one = build_tree("http://menus.example.com/story", driver_for(menus_fixture))
    two = build_tree("http://menus.example.com/story", driver_for(menus_fixture))
    assert tree_dumps(one) == tree_dumps(two)
    assert one == two


def test_tree_dump_round_trip(menus_fixture, driver_for):
    tree = build_tree("http://menus.example.com/story", driver_for(menus_fixture))
    dump = tree_dumps(tree)
    back = tree_loads(dump)
    assert back == tree
    assert tree_dumps(back) == dump


def test_crawl_result_round_trips(tmp_path, five_node_fixture):
    result = crawl_seed(
        "http://five.example.com/page",
        lambda: SimulatedDriver(five_node_fixture),
    )
    path = tmp_path / "tree.json"
    save_result(result, path)
    loaded = load_result(path)
    assert loaded.classification == result.classification
    assert loaded.tree == result.tree
    assert result_to_dict(result_from_dict(result_to_dict(result))) == result_to_dict(
        result
    )


def test_nondeferred_trees_have_no_level_two_and_no_new_resources(driver_for):
    states = {"": (["http://n.example.com/a.css"], [(f"e{i}", "click") for i in range(4)])}
    states.update({f"e{i}:click": ([], []) for i in range(4)})
    fixture = make_fixture("http://n.example.com/", states)
    tree = build_tree("http://n.example.com/", driver_for(fixture))
    assert all(state.level < 2 for state in tree.nodes.values())
    root = tree.root
    for state in tree.nodes.values():
        if state.level == 1:
            assert state.resources.difference(root.resources).keys() == frozenset()
