import random

import pytest

from descrawl.driver import FixtureResource, FixtureState, SimulatedDriver, SiteFixture
from descrawl.model import ResourceRef, ResourceSet, UriR


def R(*uris: str) -> ResourceSet:
    return ResourceSet(ResourceRef(uri=UriR.parse(u)) for u in uris)


def make_fixture(seed: str, states: dict) -> SiteFixture:
    """Build a SiteFixture from {key: (resource uris, [(target, kind)])}."""
    built = {}
    for key, (uris, events) in states.items():
        built[key] = FixtureState(
            resources=tuple(FixtureResource(uri=u) for u in uris),
            events=tuple(events),
        )
    fixture = SiteFixture(seed=seed, states=built)
    fixture.validate()
    return fixture


@pytest.fixture
def fig3_fixture():
    """Three-level tree: one branch adds a menu payload, its children add
    nothing (so they are all resource-equivalent); the sibling branch adds
    nothing at all."""
    return make_fixture(
        "http://fig3.example.com/page",
        {
            "": (
                ["http://fig3.example.com/base.css", "http://fig3.example.com/base.js"],
                [("a", "click"), ("b", "click")],
            ),
            "a:click": (
                ["http://fig3.example.com/menu.json"],
                [("c", "mouseover"), ("d", "mouseover")],
            ),
            "b:click": ([], []),
            "a:click/c:mouseover": ([], []),
            "a:click/d:mouseover": ([], []),
        },
    )


@pytest.fixture
def menus_fixture():
    """Menu-bar page: mousing over the top menu pulls JSON, mousing over the
    submenu pulls more JSON plus images."""
    return make_fixture(
        "http://menus.example.com/story",
        {
            "": (
                [
                    "http://menus.example.com/app.css",
                    "http://menus.example.com/app.js",
                ],
                [("menu", "mouseover"), ("share", "click")],
            ),
            "menu:mouseover": (
                ["http://api.menus.example.com/nav.json"],
                [("sub", "mouseover")],
            ),
            "menu:mouseover/sub:mouseover": (
                [
                    "http://api.menus.example.com/markets.json",
                    "http://img.menus.example.com/sprite.png",
                ],
                [],
            ),
            "share:click": ([], []),
        },
    )


@pytest.fixture
def five_node_fixture():
    """Root with two clicks, each revealing one new mouseover, none further:
    1 + 2 + 2 nodes, depth 2."""
    return make_fixture(
        "http://five.example.com/page",
        {
            "": (
                ["http://five.example.com/a.css"],
                [("m1", "click"), ("m2", "click")],
            ),
            "m1:click": (
                ["http://five.example.com/one.json"],
                [("x1", "mouseover")],
            ),
            "m2:click": (
                ["http://five.example.com/two.json"],
                [("x2", "mouseover")],
            ),
            "m1:click/x1:mouseover": ([], []),
            "m2:click/x2:mouseover": ([], []),
        },
    )


@pytest.fixture
def driver_for():
    def factory(fixture, **kwargs):
        return SimulatedDriver(fixture, **kwargs)

    return factory


@pytest.fixture
def rng():
    return random.Random(1234)
