"""Demo wiring: end-to-end equality with the composed functions."""

from portico.demo import (
    CORPUS,
    FIXTURE_KEYWORDS,
    SEARCH_DIR,
    SWAP_REBIND_PLAN,
    boot_demo,
)
from portico.values import KeyPath

from helpers import count_tokens


def test_boot_demo_from_scratch(tmp_path):
    container = boot_demo(tmp_path / "ws")
    snap = container.snapshot()
    assert len(snap["instances"]) == 4
    assert all(i["state"] == "Active" for i in snap["instances"])
    assert len(snap["connections"]) == 3


def test_corpus_counts_are_what_the_examples_say():
    # the fixture corpus is pinned: tests elsewhere quote these numbers
    assert count_tokens(CORPUS, "cat") == 3
    assert count_tokens(CORPUS, "dog") == 1
    assert count_tokens(CORPUS, "zzz") == 0
    assert count_tokens(CORPUS, "") == 0


def test_end_to_end_equals_composition(demo):
    ui = demo.handle("userinterface", "app")
    for keyword in FIXTURE_KEYWORDS:
        via_wiring = demo.invoke(ui, "process", [keyword])
        composed = str(count_tokens(CORPUS, keyword))
        assert via_wiring == composed


def test_search_v1_counts(demo):
    search = demo.handle("search", "search")
    assert demo.invoke(search, "process", ["cat"]) == 3
    assert demo.invoke(search, "process", ["zzz"]) == 0


def test_search_v1_empty_corpus(demo):
    demo.invoke(demo.handle("documents", "docs"), "empty", [])
    assert demo.invoke(demo.handle("search", "search"), "process", ["cat"]) == 0


def test_search_v2_scoped_counts(demo):
    demo.swap_instance("search", "search@2.0.0", SWAP_REBIND_PLAN)
    search = demo.handle("search", "search")
    assert demo.invoke(search, "perform", ["cat", SEARCH_DIR]) == 3
    assert demo.invoke(search, "perform", ["cat", "other"]) == 0


def test_adapter_route_equals_direct_perform(demo):
    demo.swap_instance("search", "search@2.0.0", SWAP_REBIND_PLAN)
    ui = demo.handle("userinterface", "app")
    search = demo.handle("search", "search")
    for keyword in FIXTURE_KEYWORDS:
        via_adapter = demo.invoke(ui, "process", [keyword])
        direct = demo.invoke(search, "perform", [keyword, SEARCH_DIR])
        assert via_adapter == str(direct)


def test_formatter_template(demo):
    from portico.runtime.packaging import InstanceConfig

    demo.instantiate(InstanceConfig("fmt2", "formatter", "1.0.0",
                                    parameters={"template": "found {} times"}))
    out = demo.invoke(demo.handle("fmt2", "format"), "process", ["3"])
    assert out == "found 3 times"


def test_documents_keypaths_are_two_level(demo):
    keys = demo.invoke(demo.handle("documents", "docs"), "keys", [])
    assert sorted(keys, key=lambda k: k.parts) == [
        KeyPath("searchPath", "a.txt"), KeyPath("searchPath", "b.txt")]


def test_fresh_documents_store_then_all(demo):
    from portico.runtime.packaging import InstanceConfig

    demo.instantiate(InstanceConfig("docs2", "documents", "1.0.0"))
    handle = demo.handle("docs2", "docs")
    demo.invoke(handle, "store", [KeyPath("x", "1.txt"), "alpha"])
    demo.invoke(handle, "store", [KeyPath("x", "2.txt"), "beta"])
    table = demo.invoke(handle, "all", [])
    assert len(table) == 2
    assert demo.invoke(handle, "find", [KeyPath("x", "1.txt")]) == "alpha"
