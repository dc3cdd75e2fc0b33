"""Acceptance suite: one test per criterion, at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to get one printed
verdict line per criterion in addition to the pytest pass/fail lines.
"""

import json
import random
import threading
import time

from click.testing import CliRunner

from portico.cli import main as cli_main
from portico.demo import (
    ADAPTER_IDENTITY,
    CORPUS,
    FIXTURE_KEYWORDS,
    SEARCH_DIR,
    SWAP_REBIND_PLAN,
)
from portico.interfaces import COMPOSITION, InterfaceKind, method_names
from portico.ism import (
    ChangeContext,
    build_model,
    closure_trace,
    direct_impact,
    impact_closure,
    is_ideal_system,
)
from portico.runtime.container import Container
from portico.runtime.events import Action
from portico.runtime.packaging import ConnectionConfig, InstanceConfig
from portico.values import decode_value, encode_value, values_equal

from helpers import bfs_reachability, count_tokens, random_model, random_value

MODEL_FILE = "demo/models/search.json"


def verdict(name: str) -> None:
    print(f"ACCEPTANCE {name}: PASS")


def test_01_ism_worked_example_via_cli():
    """`ism scope` on the shipped model reproduces the worked impact scopes."""
    runner = CliRunner()
    started = time.monotonic()
    static = runner.invoke(cli_main, [
        "--json", "ism", "scope", "--model", MODEL_FILE, "--context", "s",
        "--change", "search.Document.self", "--change", "search.Document.allFiles",
    ], catch_exceptions=False)
    monolith = runner.invoke(cli_main, [
        "--json", "ism", "scope", "--model", MODEL_FILE, "--context", "o",
        "--change", "search.Document.self", "--change", "search.Document.allFiles",
    ], catch_exceptions=False)
    elapsed = time.monotonic() - started
    assert static.exit_code == 0 and monolith.exit_code == 0
    assert json.loads(static.output)["modules"] == [
        "search.Document", "search.Search"]
    assert json.loads(monolith.output)["modules"] == [
        "search.Document", "search.Regex", "search.Search", "search.UserInterface"]
    assert elapsed < 1.0, f"took {elapsed:.3f}s"
    verdict("01 worked-example scopes")


def test_02_closure_equals_bfs_oracle_on_100_models():
    """100/100 exact matches against breadth-first reachability, < 5 s."""
    rng = random.Random(0x5EED01)
    started = time.monotonic()
    matches = 0
    for _ in range(100):
        model, sids = random_model(rng, max_services=50, max_rules=200, premise_size=1)
        rules = model.rules.lookup([ChangeContext.STATIC])
        seeds = set(rng.sample(sids, rng.randint(0, min(6, len(sids)))))
        assert impact_closure(seeds, rules) == bfs_reachability(seeds, rules)
        matches += 1
    elapsed = time.monotonic() - started
    assert matches == 100
    assert elapsed < 5.0, f"took {elapsed:.3f}s"
    verdict(f"02 closure-oracle equivalence ({matches}/100 in {elapsed:.2f}s)")


def test_03_fixpoint_property_suite():
    """Extensivity, idempotence, both monotonicities, termination: 1000+ cases."""
    rng = random.Random(0x5EED02)
    cases = 0
    for _ in range(1000):
        model, sids = random_model(rng, max_services=25, max_rules=30, premise_size=3)
        rules = model.rules.lookup([ChangeContext.STATIC])
        seeds = frozenset(rng.sample(sids, rng.randint(0, min(4, len(sids)))))
        closure = impact_closure(seeds, rules)
        # extensivity
        assert seeds <= closure
        # idempotence (fixpoint)
        assert impact_closure(closure, rules) == closure
        assert direct_impact(closure, rules) == frozenset()
        # monotone in the change set
        extra = frozenset(rng.sample(sids, rng.randint(0, min(3, len(sids)))))
        assert closure <= impact_closure(seeds | extra, rules)
        # monotone in the rule set
        rules_list = sorted(rules, key=lambda r: (sorted(s.render() for s in r.premise),
                                                  sorted(s.render() for s in r.consequence)))
        subset = frozenset(rules_list[: len(rules_list) // 2])
        assert impact_closure(seeds, subset) <= closure
        # termination bound
        trace = closure_trace(seeds, rules)
        assert len(closure) <= len(model.services())
        assert len(trace) - 1 <= len(model.services())
        cases += 1
    assert cases >= 1000
    verdict(f"03 fixpoint property suite ({cases} cases x 5 laws)")


def test_04_ideal_system_certification(demo):
    """Live export certifies ideal; one injected inter-module rule breaks it."""
    model = demo.export_ism_model(ChangeContext.STATIC)
    assert is_ideal_system(model, "search") is True

    spec = {"applications": [], "rules": {"s": []}}
    for app in sorted(model.apps()):
        modules = [{"name": m.mname, "services": sorted(
            s.sname for s in model.module_services(m) if s.sname != "self")}
            for m in sorted(model.modules(app))]
        spec["applications"].append({"name": app, "modules": modules})
    for rule in model.rules.lookup([ChangeContext.STATIC]):
        spec["rules"]["s"].append({
            "premise": sorted(s.render() for s in rule.premise),
            "consequence": sorted(s.render() for s in rule.consequence)})
    spec["rules"]["s"].append({
        "premise": ["search.documents.self"],
        "consequence": ["search.search.self"]})
    assert is_ideal_system(build_model(spec), "search") is False
    verdict("04 ideal-system certification")


def test_05_zero_loss_hot_swap(demo):
    """>=5000 requests, >=50/s, zero failures, exact event order, gap < 1 s."""
    expected = str(count_tokens(CORPUS, "cat"))
    failures, wrong = [], []
    count = 0
    lock = threading.Lock()
    stop = threading.Event()
    handle = demo.handle("userinterface", "app")

    def drive():
        nonlocal count
        while not stop.is_set():
            try:
                out = demo.invoke(handle, "process", ["cat"])
                if out != expected:
                    with lock:
                        wrong.append(out)
            except BaseException as e:  # noqa: BLE001
                with lock:
                    failures.append(e)
            with lock:
                count += 1

    threads = [threading.Thread(target=drive) for _ in range(6)]
    started = time.monotonic()
    for t in threads:
        t.start()
    while count < 1000:
        time.sleep(0.005)
    events = demo.swap_instance("search", "search@2.0.0", SWAP_REBIND_PLAN)
    while count < 5000:
        time.sleep(0.005)
    stop.set()
    for t in threads:
        t.join(10.0)
    elapsed = time.monotonic() - started

    assert failures == [], f"{len(failures)} failed requests: {failures[:3]}"
    assert wrong == [], f"wrong results: {wrong[:3]}"
    assert count >= 5000
    rate = count / elapsed
    assert rate >= 50, f"only {rate:.0f} requests/s"
    assert [e.action for e in events] == [
        Action.INSTANTIATED, Action.ACTIVATED, Action.REBOUND,
        Action.DRAIN_STARTED, Action.RELEASED]
    released = events[-1]
    assert released.detail["in_flight"] == 0
    assert released.detail["forced"] is False
    gap = released.time - events[2].time
    assert gap < 1.0, f"rebind-to-release gap {gap:.3f}s"
    verdict(f"05 zero-loss hot-swap ({count} requests at {rate:.0f}/s, gap {gap*1000:.0f}ms)")


def test_06_adapter_bridge_equivalence(demo):
    """Unary-through-adapter equals direct binary; identity adapter transparent."""
    demo.swap_instance("search", "search@2.0.0", SWAP_REBIND_PLAN)
    ui = demo.handle("userinterface", "app")
    search = demo.handle("search", "search")
    for keyword in FIXTURE_KEYWORDS:
        assert demo.invoke(ui, "process", [keyword]) == str(
            demo.invoke(search, "perform", [keyword, SEARCH_DIR]))

    rig = Container(app_name="rig")
    rig.register_builtin("echo", lambda env: type(
        "Echo", (), {"process": lambda self, v: v})())
    manifest = {
        "component": "echo", "version": "1.0.0",
        "payload": {"kind": "builtin", "factory": "echo"},
        "provides": [{"port": "main", "kind": "Processor"}], "requires": [],
    }
    rig.install_component(manifest)

    def caller_factory(env):
        out = env.port("out")
        return type("Caller", (), {"process": lambda self, v: out.process(v)})()

    rig.register_builtin("caller", caller_factory)
    rig.install_component({
        "component": "caller", "version": "1.0.0",
        "payload": {"kind": "builtin", "factory": "caller"},
        "provides": [{"port": "main", "kind": "Processor"}],
        "requires": [{"port": "out", "kind": "Processor"}],
    })
    rig.instantiate(InstanceConfig("echo", "echo", "1.0.0"))
    rig.instantiate(InstanceConfig("caller", "caller", "1.0.0"))
    rig.create_connection(ConnectionConfig(
        connection_id="c", from_instance="caller", from_port="out",
        to_instance="echo", to_port="main", adapter=None))

    rng = random.Random(0x5EED06)
    samples = [random_value(rng) for _ in range(1000)]
    handle = rig.handle("caller", "main")
    direct = [rig.invoke(handle, "process", [v]) for v in samples]
    rig.reload_adapter("c", {"script": ADAPTER_IDENTITY})
    same = 0
    for value, expected in zip(samples, direct):
        assert values_equal(rig.invoke(handle, "process", [value]), expected)
        same += 1
    assert same == 1000
    verdict(f"06 adapter-bridge equivalence ({len(FIXTURE_KEYWORDS)} keywords, {same} identity samples)")


def test_07_peer_isolation(demo):
    """Swapping one instance emits no events for peers, identities unchanged."""
    before = {i["instance"]: i["incarnation"] for i in demo.snapshot()["instances"]}
    cursor = demo.events.latest_seq
    demo.swap_instance("search", "search@2.0.0", SWAP_REBIND_PLAN)
    swap_events = demo.events.read_after(cursor)
    assert {e.subject for e in swap_events} == {"search"}
    after = {i["instance"]: i["incarnation"] for i in demo.snapshot()["instances"]}
    for peer in ("userinterface", "documents", "formatter"):
        assert after[peer] == before[peer]

    cursor = demo.events.latest_seq
    demo.unload_instance("formatter")
    assert {e.subject for e in demo.events.read_after(cursor)} == {"formatter"}
    verdict("07 peer isolation")


def test_08_monitor_injection(demo):
    """Interceptor inserted and removed live: exact window count, no failures."""
    demo.instantiate(InstanceConfig("monitor", "monitor", "1.0.0"))
    demo.create_connection(ConnectionConfig(
        connection_id="monitor-out", from_instance="monitor", from_port="out",
        to_instance="search", to_port="search", adapter=None))
    tally = demo.handle("monitor", "tally")
    ui = demo.handle("userinterface", "app")

    failures = []
    stop = threading.Event()

    def background():
        while not stop.is_set():
            try:
                demo.invoke(ui, "process", ["cat"])
            except BaseException as e:  # noqa: BLE001
                failures.append(e)

    threads = [threading.Thread(target=background) for _ in range(4)]
    for t in threads:
        t.start()
    time.sleep(0.05)
    demo.retarget_connection("userinterface-finder", "monitor:tap")  # insert, live
    time.sleep(0.05)
    stop.set()
    for t in threads:
        t.join(10.0)
    assert failures == []

    # quiesced window: every request sent between the two reads is counted
    c0 = demo.invoke(tally, "process", ["count"])
    sent = 100
    workers = []
    for _ in range(4):
        w = threading.Thread(target=lambda: [demo.invoke(ui, "process", ["cat"])
                                             for _ in range(sent // 4)])
        workers.append(w)
        w.start()
    for w in workers:
        w.join(10.0)
    c1 = demo.invoke(tally, "process", ["count"])
    assert c1 - c0 == sent

    stop.clear()
    threads = [threading.Thread(target=background) for _ in range(4)]
    for t in threads:
        t.start()
    time.sleep(0.05)
    demo.retarget_connection("userinterface-finder", "search:search")  # remove, live
    time.sleep(0.05)
    stop.set()
    for t in threads:
        t.join(10.0)
    assert failures == []
    verdict(f"08 monitor injection (window count {c1 - c0} == {sent} sent)")


def test_09_value_roundtrip_and_interface_arithmetic():
    """1000 random values re-decode equal; 15 kinds, 14 methods, composition."""
    rng = random.Random(0x5EED09)
    trips = 0
    for _ in range(1000):
        v = random_value(rng)
        assert values_equal(decode_value(encode_value(v)), v)
        trips += 1
    assert trips == 1000

    assert len(list(InterfaceKind)) == 15
    union = set()
    for kind in InterfaceKind:
        union |= method_names(kind)
    assert len(union) == 14
    for kind, parts in COMPOSITION.items():
        merged = set()
        for part in parts:
            merged |= method_names(part)
        assert method_names(kind) == merged
    assert method_names(InterfaceKind.UNIVERSAL) == union
    verdict("09 value round-trip and interface arithmetic")
