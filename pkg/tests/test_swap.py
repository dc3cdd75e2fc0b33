"""Hot-swap: event order, drain correctness, zero loss under load, peer isolation."""

import threading
import time

import pytest

from portico.demo import ADAPTER_UNARY_TO_BINARY, CORPUS, SEARCH_DIR, SWAP_REBIND_PLAN
from portico.errors import RebindIncomplete, UnknownComponent
from portico.runtime.container import Container, InstanceState
from portico.runtime.events import Action
from portico.runtime.packaging import ConnectionConfig, InstanceConfig

from helpers import count_tokens

SWAP_SEQUENCE = [Action.INSTANTIATED, Action.ACTIVATED, Action.REBOUND,
                 Action.DRAIN_STARTED, Action.RELEASED]


class LoadDriver:
    """Hammers userinterface.process from several threads, recording failures."""

    def __init__(self, container, keyword="cat", threads=6):
        self.container = container
        self.keyword = keyword
        self.expected = str(count_tokens(CORPUS, keyword))
        self.failures: list[BaseException] = []
        self.wrong: list[str] = []
        self.count = 0
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._threads = [threading.Thread(target=self._run) for _ in range(threads)]

    def _run(self):
        handle = self.container.handle("userinterface", "app")
        while not self._stop.is_set():
            try:
                out = self.container.invoke(handle, "process", [self.keyword])
            except BaseException as e:  # noqa: BLE001
                with self._lock:
                    self.failures.append(e)
                continue
            if out != self.expected:
                with self._lock:
                    self.wrong.append(out)
            with self._lock:
                self.count += 1

    def __enter__(self):
        for t in self._threads:
            t.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        for t in self._threads:
            t.join(10.0)

    def wait_at_least(self, n, timeout=30.0):
        deadline = time.monotonic() + timeout
        while self.count < n:
            assert time.monotonic() < deadline, f"only {self.count} requests in {timeout}s"
            time.sleep(0.01)


def test_swap_event_order(demo):
    events = demo.swap_instance("search", "search@2.0.0", SWAP_REBIND_PLAN)
    assert [e.action for e in events] == SWAP_SEQUENCE
    assert all(e.subject == "search" for e in events)
    released = events[-1]
    assert released.detail["in_flight"] == 0
    assert released.detail["forced"] is False


def test_swap_with_no_live_connections_releases_immediately():
    c = Container(app_name="solo")
    c.register_builtin("echo", lambda env: type("E", (), {"process": lambda s, v: v})())
    manifest = {
        "component": "echo", "version": "1.0.0",
        "payload": {"kind": "builtin", "factory": "echo"},
        "provides": [{"port": "main", "kind": "Processor"}], "requires": [],
    }
    c.install_component(manifest)
    c.install_component(dict(manifest, version="2.0.0"))
    c.instantiate(InstanceConfig("e1", "echo", "1.0.0"))
    events = c.swap_instance("e1", "echo@2.0.0")
    assert [e.action for e in events] == SWAP_SEQUENCE
    assert events[-1].detail["in_flight"] == 0


def test_swap_refused_when_plan_misses_connection(demo):
    with pytest.raises(RebindIncomplete) as exc:
        demo.swap_instance("search", "search@2.0.0", [])
    assert "userinterface-finder" in str(exc.value)
    # nothing mutated: still v1 and serving
    assert demo.instance("search").component.descriptor.version == "1.0.0"
    assert demo.invoke(demo.handle("userinterface", "app"), "process", ["cat"]) == "3"


def test_swap_refused_without_adapter_for_kind_change(demo):
    with pytest.raises(RebindIncomplete):
        demo.swap_instance("search", "search@2.0.0",
                           [{"connection": "userinterface-finder", "to_port": "search"}])


def test_swap_unknown_component(demo):
    with pytest.raises(UnknownComponent):
        demo.swap_instance("search", "search@9.9.9", SWAP_REBIND_PLAN)


def test_zero_loss_swap_under_load(demo):
    with LoadDriver(demo) as driver:
        driver.wait_at_least(500)
        events = demo.swap_instance("search", "search@2.0.0", SWAP_REBIND_PLAN)
        driver.wait_at_least(5000)
    assert driver.failures == []
    assert driver.wrong == []
    assert [e.action for e in events] == SWAP_SEQUENCE
    by_action = {e.action: e for e in events}
    assert by_action[Action.RELEASED].detail["in_flight"] == 0
    gap = by_action[Action.RELEASED].time - by_action[Action.REBOUND].time
    assert gap < 1.0


def test_peer_isolation_on_swap(demo):
    peers = ("userinterface", "documents", "formatter")
    before = {i["instance"]: i["incarnation"] for i in demo.snapshot()["instances"]}
    cursor = demo.events.latest_seq
    demo.swap_instance("search", "search@2.0.0", SWAP_REBIND_PLAN)
    swap_events = demo.events.read_after(cursor)
    assert {e.subject for e in swap_events} == {"search"}
    after = {i["instance"]: i["incarnation"] for i in demo.snapshot()["instances"]}
    for peer in peers:
        assert after[peer] == before[peer]
    # the swapped instance did change incarnation
    assert after["search"] == before["search"] + 1


def test_peer_isolation_on_unload(demo):
    cursor = demo.events.latest_seq
    demo.unload_instance("formatter")
    events = demo.events.read_after(cursor)
    assert {e.subject for e in events} == {"formatter"}


def test_draining_instance_visible_in_snapshot():
    c = Container(app_name="drainy", drain_timeout=10.0)
    entered = threading.Event()
    release = threading.Event()

    def slow_factory(env):
        class Slow:
            def process(self, v):
                entered.set()
                release.wait(10.0)
                return v

        return Slow()

    def fast_factory(env):
        class Fast:
            def process(self, v):
                return v

        return Fast()

    base = {
        "version": "1.0.0",
        "provides": [{"port": "main", "kind": "Processor"}], "requires": [],
    }
    c.register_builtin("slow", slow_factory)
    c.register_builtin("fast", fast_factory)
    c.install_component(dict(base, component="svc",
                             payload={"kind": "builtin", "factory": "slow"}))
    c.install_component(dict(base, component="svc", version="2.0.0",
                             payload={"kind": "builtin", "factory": "fast"}))
    c.instantiate(InstanceConfig("svc", "svc", "1.0.0"))

    invoker = threading.Thread(
        target=lambda: c.invoke(c.handle("svc", "main"), "process", ["x"]))
    invoker.start()
    assert entered.wait(2.0)
    swapper = threading.Thread(target=lambda: c.swap_instance("svc", "svc@2.0.0"))
    swapper.start()
    deadline = time.monotonic() + 2.0
    while True:
        snap = c.snapshot()
        draining = [i for i in snap["instances"] if i["state"] == InstanceState.DRAINING]
        if draining:
            break
        assert time.monotonic() < deadline, "never observed a draining instance"
        time.sleep(0.005)
    assert len(draining) == 1
    assert draining[0]["instance"] == "svc"
    # while the old incarnation drains, new requests land on the replacement
    assert c.invoke(c.handle("svc", "main"), "process", ["y"]) == "y"
    release.set()
    invoker.join(2.0)
    swapper.join(2.0)
    assert not swapper.is_alive()
    states = {i["state"] for i in c.snapshot()["instances"]}
    assert states == {InstanceState.ACTIVE}


def test_monitor_injection_under_load(demo):
    """Insert the interceptor live, count an exact window, remove it live."""
    demo.instantiate(InstanceConfig("monitor", "monitor", "1.0.0"))
    demo.create_connection(ConnectionConfig(
        connection_id="monitor-out", from_instance="monitor", from_port="out",
        to_instance="search", to_port="search", adapter=None,
    ))
    tally = demo.handle("monitor", "tally")
    ui = demo.handle("userinterface", "app")

    with LoadDriver(demo, threads=4) as driver:
        driver.wait_at_least(200)
        demo.retarget_connection("userinterface-finder", "monitor:tap")
        driver.wait_at_least(driver.count + 200)
    assert driver.failures == []

    # quiesced exact-count window
    c0 = demo.invoke(tally, "process", ["count"])
    sent = 100
    threads = []
    for _ in range(4):
        t = threading.Thread(target=lambda: [demo.invoke(ui, "process", ["cat"])
                                             for _ in range(sent // 4)])
        threads.append(t)
        t.start()
    for t in threads:
        t.join(10.0)
    c1 = demo.invoke(tally, "process", ["count"])
    assert c1 - c0 == sent

    # removal under load, equally live
    with LoadDriver(demo, threads=4) as driver:
        driver.wait_at_least(200)
        demo.retarget_connection("userinterface-finder", "search:search")
        driver.wait_at_least(driver.count + 200)
    assert driver.failures == []


def test_monitor_with_zero_traffic_counts_zero(demo):
    demo.instantiate(InstanceConfig("monitor", "monitor", "1.0.0"))
    assert demo.invoke(demo.handle("monitor", "tally"), "process", ["count"]) == 0


def test_monitor_plus_swap_simultaneously(demo):
    demo.instantiate(InstanceConfig("monitor", "monitor", "1.0.0"))
    demo.create_connection(ConnectionConfig(
        connection_id="monitor-out", from_instance="monitor", from_port="out",
        to_instance="search", to_port="search", adapter=None,
    ))
    demo.retarget_connection("userinterface-finder", "monitor:tap")
    plan = [{"connection": "monitor-out", "to_port": "search",
             "adapter": {"script": ADAPTER_UNARY_TO_BINARY,
                         "parameters": {"dir": SEARCH_DIR}}}]
    with LoadDriver(demo, threads=4) as driver:
        driver.wait_at_least(300)
        demo.swap_instance("search", "search@2.0.0", plan)
        driver.wait_at_least(driver.count + 300)
    assert driver.failures == []
    assert driver.wrong == []


def test_drain_correctness_over_whole_event_log(demo):
    # several lifecycle operations, then check the global invariant: every
    # cooperative Released records zero in-flight and follows a DrainStarted
    # for the same subject
    demo.swap_instance("search", "search@2.0.0", SWAP_REBIND_PLAN)
    demo.instantiate(InstanceConfig("fmt2", "formatter", "1.0.0"))
    demo.unload_instance("fmt2")
    demo.unload_instance("formatter")
    events = demo.events.read_after(0)
    drain_started: dict[str, int] = {}
    for event in events:
        if event.action == Action.DRAIN_STARTED:
            drain_started[event.subject] = event.seq
        elif event.action == Action.RELEASED:
            assert event.detail["forced"] is False
            assert event.detail["in_flight"] == 0
            assert drain_started.get(event.subject, 10**9) < event.seq
