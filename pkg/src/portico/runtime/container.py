"""The component container: repository, instances, routing, draining hot-swap.

Locking model. Two locks with strict roles:

* ``_lifecycle`` — the lifecycle executor. Every state transition (scan apply,
  instantiate, swap, unload, relink) runs holding it, so transitions are
  totally ordered and the event log is deterministic. It may be held across a
  drain wait.
* ``_state`` — guards the instance/port/connection maps for consistent
  snapshots and is never held across a blocking wait, so reads stay
  responsive while a swap is draining.

Invocation paths take neither lock. They resolve ports via dict reads,
reserve the owning instance with a state-checked in-flight increment, and
retry resolution when they lose a race against a rebind: a request is served
by the old instance or the new one, never dropped and never delivered to a
released instance.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from ..errors import (
    DuplicateInstanceId,
    IllegalTransition,
    InstanceFault,
    NoSuchMethod,
    PayloadLoadFailure,
    PorticoError,
    RebindIncomplete,
    TargetDraining,
    UnboundPort,
    UnknownComponent,
    UnknownEndpoint,
    UnknownId,
    UnknownPort,
)
from ..interfaces import (
    METHODS,
    InterfaceKind,
    PortHandle,
    conforms_to,
    method_names,
    signature,
)
from ..ism.model import ChangeContext, SystemModel, build_model
from .environment import InstanceEnvironment
from .events import Action, EventLog, LifecycleEvent
from .linker import CompiledAdapter, Connection, Linker
from .packaging import (
    PAYLOAD_SOURCE,
    AdapterSpec,
    ComponentDescriptor,
    ConnectionConfig,
    InstanceConfig,
    ScannedPackage,
    config_digest,
    parse_adapter_spec,
    parse_manifest,
    read_package_bytes,
    scan_directory,
    validate_params,
)
from .sandbox import load_payload_factory

_KEEP_ADAPTER = "__keep__"


class InstanceState:
    LOADED = "Loaded"
    ACTIVE = "Active"
    DRAINING = "Draining"
    RELEASED = "Released"


@dataclass
class LoadedComponent:
    descriptor: ComponentDescriptor
    factory: Callable
    digest: str
    from_scan: bool = False

    @property
    def ref(self) -> str:
        return self.descriptor.ref


class Port:
    """A provided endpoint of one live incarnation."""

    __slots__ = ("owner", "name", "kind", "target")

    def __init__(self, owner: "Instance", name: str, kind: InterfaceKind, target: Any):
        self.owner = owner
        self.name = name
        self.kind = kind
        self.target = target

    def methods(self) -> frozenset[str]:
        answered = {m for m in METHODS if callable(getattr(self.target, m, None))}
        answered.add("about")  # runtime-provided metadata fallback
        return frozenset(answered)

    def call(self, method: str, args: list) -> Any:
        fn = getattr(self.target, method, None)
        if not callable(fn):
            if method == "about":
                return self.owner.about(self)
            raise NoSuchMethod(
                f"{self.owner.instance_id}:{self.name} does not implement {method}",
                subject=self.owner.instance_id,
            )
        try:
            return fn(*args)
        except PorticoError:
            raise
        except Exception as e:
            raise InstanceFault(
                f"{self.owner.instance_id}: {e!r}", subject=self.owner.instance_id
            ) from e


class Instance:
    """One incarnation of a configured component instance."""

    def __init__(self, config: InstanceConfig, component: LoadedComponent,
                 incarnation: int, env: InstanceEnvironment, payload: Any):
        self.config = config
        self.component = component
        self.incarnation = incarnation
        self.env = env
        self.payload = payload
        self.state = InstanceState.LOADED
        self.in_flight = 0
        self.born = time.time()
        self._lock = threading.Lock()
        self._zero = threading.Condition(self._lock)
        self.ports: dict[str, Port] = {}
        for decl in component.descriptor.provides:
            candidate = getattr(payload, decl.port, None)
            target = candidate if candidate is not None and not callable(candidate) else payload
            self.ports[decl.port] = Port(self, decl.port, decl.kind, target)

    @property
    def instance_id(self) -> str:
        return self.config.instance_id

    def validate_ports(self) -> None:
        for port in self.ports.values():
            missing = method_names(port.kind) - port.methods()
            if missing:
                raise PayloadLoadFailure(
                    f"{self.instance_id}:{port.name} ({port.kind.value}) missing "
                    f"methods: {', '.join(sorted(missing))}",
                    subject=self.instance_id,
                )

    def about(self, port: Port) -> dict:
        return {
            "instance": self.instance_id,
            "component": self.component.descriptor.component,
            "version": self.component.descriptor.version,
            "port": port.name,
            "kind": port.kind.value,
        }

    # -- request accounting (invoker threads) ------------------------------

    def try_begin(self) -> bool:
        with self._lock:
            if self.state != InstanceState.ACTIVE:
                return False
            self.in_flight += 1
            return True

    def end(self) -> None:
        with self._lock:
            self.in_flight -= 1
            if self.in_flight == 0:
                self._zero.notify_all()

    # -- transitions (lifecycle executor) -----------------------------------

    def activate(self) -> None:
        with self._lock:
            if self.state != InstanceState.LOADED:
                raise IllegalTransition(
                    f"{self.instance_id}: cannot activate from {self.state}",
                    subject=self.instance_id,
                )
            self.state = InstanceState.ACTIVE

    def begin_drain(self) -> None:
        with self._lock:
            if self.state != InstanceState.ACTIVE:
                raise IllegalTransition(
                    f"{self.instance_id}: cannot drain from {self.state}",
                    subject=self.instance_id,
                )
            self.state = InstanceState.DRAINING

    def await_drained(self, timeout: float) -> bool:
        """True when in-flight hit zero; False when the timeout expired."""
        deadline = time.monotonic() + timeout
        with self._lock:
            while self.in_flight > 0:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return False
                self._zero.wait(remaining)
            return True

    def mark_released(self) -> None:
        with self._lock:
            self.state = InstanceState.RELEASED

    def to_obj(self) -> dict:
        return {
            "instance": self.instance_id,
            "component": self.component.descriptor.component,
            "version": self.component.descriptor.version,
            "state": self.state,
            "in_flight": self.in_flight,
            "incarnation": self.incarnation,
            "ports": [
                {"port": p.name, "kind": p.kind.value}
                for p in sorted(self.ports.values(), key=lambda p: p.name)
            ],
        }


@dataclass
class DeltaReport:
    """Pure scan result; applying it is a separate step."""

    root: str
    components_added: list[ScannedPackage] = field(default_factory=list)
    components_updated: list[ScannedPackage] = field(default_factory=list)
    components_removed: list[str] = field(default_factory=list)
    instances_added: list[tuple[InstanceConfig, str]] = field(default_factory=list)
    instances_updated: list[tuple[InstanceConfig, str]] = field(default_factory=list)
    instances_removed: list[str] = field(default_factory=list)
    connections_added: list[tuple[ConnectionConfig, str]] = field(default_factory=list)
    connections_updated: list[tuple[ConnectionConfig, str]] = field(default_factory=list)
    connections_removed: list[str] = field(default_factory=list)

    _FIELDS = (
        "components_added", "components_updated", "components_removed",
        "instances_added", "instances_updated", "instances_removed",
        "connections_added", "connections_updated", "connections_removed",
    )

    def is_empty(self) -> bool:
        return not any(getattr(self, f) for f in self._FIELDS)

    def to_obj(self) -> dict:
        return {
            "root": self.root,
            "components": {
                "added": [p.descriptor.ref for p in self.components_added],
                "updated": [p.descriptor.ref for p in self.components_updated],
                "removed": list(self.components_removed),
            },
            "instances": {
                "added": [c.instance_id for c, _ in self.instances_added],
                "updated": [c.instance_id for c, _ in self.instances_updated],
                "removed": list(self.instances_removed),
            },
            "connections": {
                "added": [c.connection_id for c, _ in self.connections_added],
                "updated": [c.connection_id for c, _ in self.connections_updated],
                "removed": list(self.connections_removed),
            },
        }


class Container:
    def __init__(
        self,
        app_name: str = "app",
        root: str | Path | None = None,
        drain_timeout: float = 30.0,
        scan_interval: float = 2.0,
        event_capacity: int = 4096,
    ):
        if "." in app_name or not app_name:
            raise ValueError("app_name must be non-empty and dot-free")
        self.app_name = app_name
        self.root = Path(root) if root is not None else None
        self.drain_timeout = drain_timeout
        self.scan_interval = scan_interval
        self.events = EventLog(capacity=event_capacity)
        self._lifecycle = threading.RLock()
        self._state = threading.RLock()
        self._components: dict[tuple[str, str], LoadedComponent] = {}
        self._instances: dict[str, Instance] = {}
        self._retiring: set[Instance] = set()
        self._ports: dict[tuple[str, str], Port] = {}
        self._builtins: dict[str, Callable] = {}
        self._linker = Linker(self)
        self._scan_state: dict[str, dict] = {"components": {}, "instances": {}, "connections": {}}
        self._adapter_targets: dict[str, Callable[[], PortHandle]] = {}
        self._autoscan: threading.Thread | None = None
        self._autoscan_stop = threading.Event()

    # ------------------------------------------------------------------ events

    def _emit(self, subject: str, action: Action, detail: dict | None = None) -> LifecycleEvent:
        return self.events.append(subject, action, detail)

    # -------------------------------------------------------------- repository

    def register_builtin(self, name: str, factory: Callable) -> None:
        """Register a host-native payload factory for builtin components."""
        self._builtins[name] = factory

    def install_component(self, manifest: Mapping[str, Any]) -> list[LifecycleEvent]:
        """Install a component straight from a manifest dict (builtin payloads,
        or source payloads carrying their code under a "source" key)."""
        descriptor = parse_manifest(manifest, "<install>")
        source = manifest.get("source") if descriptor.payload_kind == PAYLOAD_SOURCE else None
        with self._lifecycle:
            loaded = self._load_component(
                descriptor, source, config_digest(dict(manifest)), from_scan=False
            )
            return [self._install_loaded(loaded)]

    def load_package_bytes(self, data: bytes, name: str = "<upload>") -> list[LifecycleEvent]:
        descriptor, source, digest = read_package_bytes(data, name)
        with self._lifecycle:
            loaded = self._load_component(descriptor, source, digest, from_scan=False)
            return [self._install_loaded(loaded)]

    def load_package_file(self, path: str | Path) -> list[LifecycleEvent]:
        return self.load_package_bytes(Path(path).read_bytes(), str(path))

    def _load_component(self, descriptor: ComponentDescriptor, source: str | None,
                        digest: str, from_scan: bool) -> LoadedComponent:
        if descriptor.payload_kind == PAYLOAD_SOURCE:
            if source is None:
                raise PayloadLoadFailure(
                    f"{descriptor.ref}: source payload missing", subject=descriptor.ref
                )
            factory = load_payload_factory(source, f"<payload {descriptor.ref}>")
        else:
            factory = self._builtins.get(descriptor.payload_ref)
            if factory is None:
                raise PayloadLoadFailure(
                    f"{descriptor.ref}: builtin factory {descriptor.payload_ref!r} "
                    "is not registered",
                    subject=descriptor.ref,
                )
        return LoadedComponent(descriptor, factory, digest, from_scan)

    def _install_loaded(self, loaded: LoadedComponent) -> LifecycleEvent:
        key = (loaded.descriptor.component, loaded.descriptor.version)
        action = Action.UPDATED if key in self._components else Action.LOADED
        with self._state:
            self._components[key] = loaded
        return self._emit(
            loaded.descriptor.component, action,
            {"version": loaded.descriptor.version, "digest": loaded.digest},
        )

    def component(self, ref: str) -> LoadedComponent:
        component, _, version = ref.partition("@")
        entry = self._components.get((component, version))
        if entry is None:
            raise UnknownComponent(f"unknown component: {ref}", subject=ref)
        return entry

    # ------------------------------------------------------------- scan/apply

    def scan(self, root: str | Path | None = None) -> DeltaReport:
        """Compare a deploy directory against what was last applied. Pure."""
        root = Path(root) if root is not None else self.root
        if root is None:
            raise UnknownId("container has no scan root configured")
        packages, instances, connections = scan_directory(root)
        delta = DeltaReport(root=str(root))

        seen = self._scan_state["components"]
        for key, pkg in sorted(packages.items()):
            if key not in seen:
                delta.components_added.append(pkg)
            elif seen[key] != pkg.digest:
                delta.components_updated.append(pkg)
        delta.components_removed = [
            f"{k[0]}@{k[1]}" for k in sorted(seen) if k not in packages
        ]

        seen = self._scan_state["instances"]
        for iid, (cfg, digest) in sorted(instances.items()):
            if iid not in seen:
                delta.instances_added.append((cfg, digest))
            elif seen[iid] != digest:
                delta.instances_updated.append((cfg, digest))
        delta.instances_removed = [i for i in sorted(seen) if i not in instances]

        seen = self._scan_state["connections"]
        for cid, (cfg, digest) in sorted(connections.items()):
            if cid not in seen:
                delta.connections_added.append((cfg, digest))
            elif seen[cid] != digest:
                delta.connections_updated.append((cfg, digest))
        delta.connections_removed = [c for c in sorted(seen) if c not in connections]
        return delta

    def apply_delta(self, delta: DeltaReport) -> list[LifecycleEvent]:
        """Make container state match the scanned directory; emits the events.

        Individual failures (a broken payload, a bad config) are recorded as
        Scanned events with error detail and skipped, leaving the rest of the
        delta applied; the offending file keeps reappearing in later deltas.
        """
        events: list[LifecycleEvent] = []
        with self._lifecycle:
            for cid in delta.connections_removed:
                events.extend(self._apply_guard(cid, self.drop_connection, cid))
                self._scan_state["connections"].pop(cid, None)
            for iid in delta.instances_removed:
                events.extend(self._apply_guard(iid, self.unload_instance, iid))
                self._scan_state["instances"].pop(iid, None)
            for ref in delta.components_removed:
                component, _, version = ref.partition("@")
                with self._state:
                    self._components.pop((component, version), None)
                self._scan_state["components"].pop((component, version), None)
                events.append(self._emit(component, Action.UNLOADED, {"version": version}))

            for pkg in delta.components_added + delta.components_updated:
                key = (pkg.descriptor.component, pkg.descriptor.version)
                updating = key in self._scan_state["components"]
                try:
                    loaded = self._load_component(pkg.descriptor, pkg.payload_source,
                                                  pkg.digest, from_scan=True)
                except PorticoError as e:
                    events.append(self._emit(pkg.descriptor.ref, Action.SCANNED,
                                             {"error": e.code, "message": str(e)}))
                    continue
                events.append(self._install_loaded(loaded))
                self._scan_state["components"][key] = pkg.digest
                if updating:
                    for iid in sorted(self._instances):
                        inst = self._instances[iid]
                        d = inst.component.descriptor
                        if (d.component, d.version) == key:
                            events.extend(self._apply_guard(
                                iid, self.swap_instance, iid, pkg.descriptor.ref
                            ))

            for cfg, digest in delta.instances_added:
                ok, batch = self._apply_step(cfg.instance_id, self.instantiate, cfg)
                events.extend(batch)
                if ok:
                    self._scan_state["instances"][cfg.instance_id] = digest
            for cfg, digest in delta.instances_updated:
                events.append(self._emit(cfg.instance_id, Action.CONFIG_CHANGED, {}))
                ok, batch = self._apply_step(
                    cfg.instance_id, self.swap_instance,
                    cfg.instance_id, cfg.component_ref, None, cfg.parameters,
                )
                events.extend(batch)
                if ok:
                    self._scan_state["instances"][cfg.instance_id] = digest

            for cfg, digest in delta.connections_added:
                ok, batch = self._apply_step(cfg.connection_id, self.create_connection, cfg)
                events.extend(batch)
                if ok:
                    self._scan_state["connections"][cfg.connection_id] = digest
            for cfg, digest in delta.connections_updated:
                ok, batch = self._apply_step(cfg.connection_id, self._update_connection, cfg)
                events.extend(batch)
                if ok:
                    self._scan_state["connections"][cfg.connection_id] = digest
        return events

    def _apply_step(self, subject: str, fn: Callable, *args) -> tuple[bool, list[LifecycleEvent]]:
        try:
            return True, fn(*args)
        except PorticoError as e:
            return False, [self._emit(subject, Action.SCANNED,
                                      {"error": e.code, "message": str(e)})]

    def _apply_guard(self, subject: str, fn: Callable, *args) -> list[LifecycleEvent]:
        return self._apply_step(subject, fn, *args)[1]

    def scan_and_apply(self, root: str | Path | None = None) -> list[LifecycleEvent]:
        with self._lifecycle:
            return self.apply_delta(self.scan(root))

    # -------------------------------------------------------------- instances

    def instantiate(self, cfg: InstanceConfig) -> list[LifecycleEvent]:
        with self._lifecycle:
            if cfg.instance_id in self._instances:
                raise DuplicateInstanceId(
                    f"instance already live: {cfg.instance_id}", subject=cfg.instance_id
                )
            instance = self._build_incarnation(cfg, self.component(cfg.component_ref), 1)
            events = [self._emit(cfg.instance_id, Action.INSTANTIATED, {
                "component": cfg.component_ref, "incarnation": 1,
            })]
            with self._state:
                self._instances[cfg.instance_id] = instance
                for port in instance.ports.values():
                    self._ports[(cfg.instance_id, port.name)] = port
            instance.activate()
            events.append(self._emit(cfg.instance_id, Action.ACTIVATED, {}))
            return events

    def _build_incarnation(self, cfg: InstanceConfig, component: LoadedComponent,
                           incarnation: int) -> Instance:
        params = validate_params(component.descriptor.config_schema, cfg.parameters,
                                 cfg.instance_id)
        env = InstanceEnvironment(
            instance_id=cfg.instance_id,
            component_ref=component.ref,
            parameters=params,
            environment=cfg.environment,
            invoker=self._required_invoke,
            required_ports=tuple(p.port for p in component.descriptor.requires),
        )
        try:
            payload = component.factory(env)
        except PorticoError:
            raise
        except Exception as e:
            raise PayloadLoadFailure(
                f"{cfg.instance_id}: payload factory raised {e!r}", subject=cfg.instance_id
            ) from e
        cfg = replace(cfg, parameters=params)
        instance = Instance(cfg, component, incarnation, env, payload)
        instance.validate_ports()
        return instance

    def unload_instance(self, instance_id: str) -> list[LifecycleEvent]:
        with self._lifecycle:
            instance = self._instances.get(instance_id)
            if instance is None:
                raise UnknownId(f"unknown instance: {instance_id}", subject=instance_id)
            instance.begin_drain()
            events = [self._emit(instance_id, Action.DRAIN_STARTED,
                                 {"incarnation": instance.incarnation})]
            drained = instance.await_drained(self.drain_timeout)
            with self._state:
                for key in [k for k, p in self._ports.items() if p.owner is instance]:
                    del self._ports[key]
                del self._instances[instance_id]
            instance.mark_released()
            events.append(self._emit(instance_id, Action.RELEASED, {
                "incarnation": instance.incarnation,
                "in_flight": instance.in_flight,
                "forced": not drained,
            }))
            return events

    def swap_instance(self, instance_id: str, component_ref: str,
                      rebind_plan: Iterable[Mapping] | None = None,
                      parameters: Mapping[str, Any] | None = None) -> list[LifecycleEvent]:
        """Replace a live instance; zero-loss for invokers, atomic rebind.

        An explicit plan must cover every inbound connection (entries may
        change the target port and the adapter); with no plan, wiring is kept
        as-is and merely revalidated. Outbound connections are revalidated
        against the replacement's required ports. Nothing mutates until the
        whole plan checks out.
        """
        with self._lifecycle:
            old = self._instances.get(instance_id)
            if old is None:
                raise UnknownId(f"unknown instance: {instance_id}", subject=instance_id)
            if old.state != InstanceState.ACTIVE:
                raise IllegalTransition(
                    f"{instance_id}: cannot swap while {old.state}", subject=instance_id
                )
            component = self.component(component_ref)
            plan = {e["connection"]: dict(e) for e in (rebind_plan or [])}

            # Validation phase: resolve every rebind before touching anything.
            inbound_rebinds = []
            for conn in self._linker.inbound(instance_id):
                entry = plan.pop(conn.connection_id, None)
                if entry is None and rebind_plan is not None:
                    raise RebindIncomplete(
                        f"rebind plan misses connection {conn.connection_id}",
                        subject=conn.connection_id,
                    )
                entry = entry or {}
                to_port = entry.get("to_port", conn.to_port)
                decl = component.descriptor.provided(to_port)
                if decl is None:
                    raise RebindIncomplete(
                        f"{component_ref} does not provide port {to_port!r} "
                        f"needed by {conn.connection_id}",
                        subject=conn.connection_id,
                    )
                adapter_action = self._plan_adapter_action(entry, conn.connection_id)
                effective = adapter_action[1] if adapter_action[0] else conn.adapter
                if effective is None and conn.from_kind != decl.kind:
                    raise RebindIncomplete(
                        f"{conn.connection_id}: {conn.from_kind.value} -> "
                        f"{decl.kind.value} needs an adapter in the rebind plan",
                        subject=conn.connection_id,
                    )
                inbound_rebinds.append((conn, to_port, adapter_action))
            outbound_rebinds = []
            for conn in self._linker.outbound(instance_id):
                entry = plan.pop(conn.connection_id, None) or {}
                decl = component.descriptor.required(conn.from_port)
                if decl is None:
                    raise RebindIncomplete(
                        f"{component_ref} does not require port {conn.from_port!r} "
                        f"used by {conn.connection_id}",
                        subject=conn.connection_id,
                    )
                adapter_action = self._plan_adapter_action(entry, conn.connection_id)
                effective = adapter_action[1] if adapter_action[0] else conn.adapter
                if effective is None and decl.kind != conn.to_kind:
                    raise RebindIncomplete(
                        f"{conn.connection_id}: replacement requires {decl.kind.value} "
                        f"but target provides {conn.to_kind.value}; adapter needed",
                        subject=conn.connection_id,
                    )
                outbound_rebinds.append((conn, decl.kind, adapter_action))
            if plan:
                raise RebindIncomplete(
                    f"rebind plan names unknown connections: {', '.join(sorted(plan))}",
                    subject=instance_id,
                )

            cfg = old.config
            if parameters is not None:
                cfg = replace(cfg, parameters=dict(parameters))
            cfg = replace(cfg, component=component.descriptor.component,
                          version=component.descriptor.version)
            new = self._build_incarnation(cfg, component, old.incarnation + 1)

            # Mutation phase.
            events = [self._emit(instance_id, Action.INSTANTIATED, {
                "component": component_ref, "incarnation": new.incarnation,
            })]
            new.activate()
            events.append(self._emit(instance_id, Action.ACTIVATED, {}))
            displaced: list[CompiledAdapter | None] = []
            with self._state:
                self._instances[instance_id] = new
                self._retiring.add(old)
                for key in [k for k, p in self._ports.items() if p.owner is old]:
                    del self._ports[key]
                for port in new.ports.values():
                    self._ports[(instance_id, port.name)] = port
                for conn, to_port, adapter_action in inbound_rebinds:
                    _, out = self._linker.retarget(conn.connection_id, instance_id,
                                                   to_port, adapter_action)
                    displaced.append(out)
                for conn, from_kind, adapter_action in outbound_rebinds:
                    _, out = self._linker.retarget(conn.connection_id, conn.to_instance,
                                                   conn.to_port, adapter_action,
                                                   from_kind=from_kind)
                    displaced.append(out)
            events.append(self._emit(instance_id, Action.REBOUND, {
                "component": component_ref,
                "connections": sorted(
                    c.connection_id for c, _, _ in inbound_rebinds + outbound_rebinds
                ),
            }))
            old.begin_drain()
            events.append(self._emit(instance_id, Action.DRAIN_STARTED, {
                "incarnation": old.incarnation,
            }))
            drained = old.await_drained(self.drain_timeout)
            with self._state:
                self._retiring.discard(old)
            old.mark_released()
            events.append(self._emit(instance_id, Action.RELEASED, {
                "incarnation": old.incarnation,
                "in_flight": old.in_flight,
                "forced": not drained,
            }))
            for adapter in displaced:
                self._linker.release_adapter(adapter)
            return events

    def _plan_adapter_action(self, entry: Mapping, connection_id: str,
                             ) -> tuple[bool, CompiledAdapter | None]:
        if "adapter" not in entry:
            return (False, None)
        spec = parse_adapter_spec(entry["adapter"], connection_id)
        return (True, self._linker.compile_adapter(spec, connection_id))

    # ------------------------------------------------------------- connections

    def create_connection(self, cfg: ConnectionConfig) -> list[LifecycleEvent]:
        with self._lifecycle:
            adapter = self._linker.compile_adapter(cfg.adapter, cfg.connection_id)
            try:
                with self._state:
                    conn = self._linker.create(cfg, adapter)
            except PorticoError:
                self._linker.release_adapter(adapter)
                raise
            return [self._emit(cfg.connection_id, Action.REBOUND, {
                "from": f"{conn.from_instance}:{conn.from_port}",
                "to": f"{conn.to_instance}:{conn.to_port}",
                "adapter": conn.adapter.kind if conn.adapter else None,
            })]

    def retarget_connection(self, connection_id: str, to: str,
                            adapter: Mapping | None | str = _KEEP_ADAPTER,
                            ) -> list[LifecycleEvent]:
        """Re-point a connection live; by default the adapter is kept."""
        to_instance, sep, to_port = to.partition(":")
        if not sep:
            raise UnknownEndpoint(f"expected 'instance:port', got {to!r}", subject=to)
        with self._lifecycle:
            if adapter == _KEEP_ADAPTER:
                action: tuple[bool, CompiledAdapter | None] = (False, None)
            else:
                spec = parse_adapter_spec(adapter, connection_id)
                action = (True, self._linker.compile_adapter(spec, connection_id))
            try:
                with self._state:
                    conn, displaced = self._linker.retarget(
                        connection_id, to_instance, to_port, action
                    )
            except PorticoError:
                if action[0]:
                    self._linker.release_adapter(action[1])
                raise
            event = self._emit(connection_id, Action.REBOUND, {
                "from": f"{conn.from_instance}:{conn.from_port}",
                "to": f"{conn.to_instance}:{conn.to_port}",
                "adapter": conn.adapter.kind if conn.adapter else None,
            })
            self._linker.release_adapter(displaced)
            return [event]

    def reload_adapter(self, connection_id: str, spec_obj: Mapping | None) -> list[LifecycleEvent]:
        spec = parse_adapter_spec(spec_obj, connection_id)
        with self._lifecycle:
            adapter = self._linker.compile_adapter(spec, connection_id)
            try:
                with self._state:
                    conn, displaced = self._linker.reload_adapter(connection_id, adapter)
            except PorticoError:
                self._linker.release_adapter(adapter)
                raise
            event = self._emit(connection_id, Action.CONFIG_CHANGED, {
                "adapter": conn.adapter.kind if conn.adapter else None,
            })
            self._linker.release_adapter(displaced)
            return [event]

    def drop_connection(self, connection_id: str) -> list[LifecycleEvent]:
        with self._lifecycle:
            with self._state:
                conn = self._linker.drop(connection_id)
            event = self._emit(connection_id, Action.UNLOADED, {"kind": "connection"})
            self._linker.release_adapter(conn.adapter)
            return [event]

    def _update_connection(self, cfg: ConnectionConfig) -> list[LifecycleEvent]:
        """Config-file change: retarget and/or swap adapter, atomically."""
        with self._lifecycle:
            conn = self._linker.get(cfg.connection_id)
            if (cfg.from_instance, cfg.from_port) != (conn.from_instance, conn.from_port):
                events = self.drop_connection(cfg.connection_id)
                events.extend(self.create_connection(cfg))
                return events
            adapter_obj = None
            if cfg.adapter is not None:
                adapter_obj = {
                    "script": cfg.adapter.script,
                    "component": cfg.adapter.component,
                    "parameters": dict(cfg.adapter.parameters),
                }
                adapter_obj = {k: v for k, v in adapter_obj.items() if v is not None}
                if not adapter_obj.get("parameters"):
                    adapter_obj.pop("parameters", None)
            return self.retarget_connection(
                cfg.connection_id, f"{cfg.to_instance}:{cfg.to_port}", adapter_obj
            )

    # -- packaged adapter components (hidden instances owned by connections) --

    def bind_adapter_component(self, connection_id: str, spec: AdapterSpec,
                               target_resolver: Callable[[], PortHandle]) -> tuple[str, str]:
        component = self.component(spec.component)
        call_port = next(
            (p.port for p in component.descriptor.provides
             if p.kind == InterfaceKind.PROCESSOR),
            None,
        )
        if call_port is None:
            raise PayloadLoadFailure(
                f"adapter component {spec.component} provides no Processor port",
                subject=connection_id,
            )
        serial = 1
        while f"{connection_id}-adapter{serial}" in self._instances:
            serial += 1
        adapter_id = f"{connection_id}-adapter{serial}"
        self._adapter_targets[adapter_id] = target_resolver
        cfg = InstanceConfig(
            instance_id=adapter_id,
            component=component.descriptor.component,
            version=component.descriptor.version,
            parameters=dict(spec.parameters),
        )
        try:
            self.instantiate(cfg)
        except PorticoError:
            self._adapter_targets.pop(adapter_id, None)
            raise
        return adapter_id, call_port

    def release_adapter_component(self, adapter_id: str) -> None:
        self._adapter_targets.pop(adapter_id, None)
        if adapter_id in self._instances:
            self.unload_instance(adapter_id)

    # -------------------------------------------------------------- invocation

    def handle(self, instance_id: str, port: str) -> PortHandle:
        return PortHandle(instance_id, port)

    def live_port(self, instance_id: str, port: str) -> Port | None:
        return self._ports.get((instance_id, port))

    def dispatch_on_port(self, port: Port, method: str, args: list) -> Any:
        """Method/arity checks plus the actual call; caller holds the reservation."""
        allowed = method_names(port.kind) | {"about"}
        sig = signature(method)
        target = f"{port.owner.instance_id}:{port.name}"
        if sig is None or method not in allowed:
            raise NoSuchMethod(
                f"{target} ({port.kind.value}) has no method {method!r}", subject=target
            )
        if not sig.accepts_arity(len(args)):
            raise NoSuchMethod(
                f"{target}: {method} accepts {sig.min_args}..{sig.max_args} "
                f"args, got {len(args)}",
                subject=target,
            )
        return port.call(method, args)

    def repin_route(self, connection, route, current_port: Port) -> None:
        """Point a route at a re-created target incarnation (invoker-side heal)."""
        from .linker import Route

        with self._state:
            if connection.route is route:
                connection._route = Route(
                    route.to_instance, route.to_port, route.to_kind,
                    route.adapter, current_port, route.from_kind,
                )

    def invoke(self, target: PortHandle, method: str, args: Iterable[Any] = ()) -> Any:
        """Dispatch one call; exact in-flight accounting, swap-safe resolution."""
        args = list(args)
        key = (target.instance, target.port)
        while True:
            port = self._ports.get(key)
            if port is None:
                raise UnknownPort(f"no live port {target.render()}", subject=target.render())
            if port.owner.try_begin():
                break
            if self._ports.get(key) is port:
                # Draining with no replacement registered (unload in progress).
                raise TargetDraining(
                    f"{target.render()} is draining with no replacement",
                    subject=target.instance,
                )
            # Lost the race against a rebind: resolve again, hit the replacement.
        try:
            return self.dispatch_on_port(port, method, args)
        finally:
            port.owner.end()

    def conforms(self, target: PortHandle, kind: InterfaceKind) -> bool:
        port = self._ports.get((target.instance, target.port))
        if port is None:
            raise UnknownPort(f"no live port {target.render()}", subject=target.render())
        return conforms_to(port.methods(), kind)

    def _required_invoke(self, instance_id: str, port: str, method: str, args: list) -> Any:
        resolver = self._adapter_targets.get(instance_id)
        if resolver is not None and port == "next":
            return self.invoke(resolver(), method, args)
        conn = self._linker.connection_for(instance_id, port)
        if conn is None:
            raise UnboundPort(
                f"{instance_id}:{port} has no connection bound", subject=instance_id
            )
        return self._linker.invoke_through(conn, method, args)

    # ------------------------------------------------------------ introspection

    def provided_port_decl(self, instance_id: str, port: str):
        inst = self._instances.get(instance_id)
        return inst.component.descriptor.provided(port) if inst else None

    def required_port_decl(self, instance_id: str, port: str):
        inst = self._instances.get(instance_id)
        return inst.component.descriptor.required(port) if inst else None

    def instance(self, instance_id: str) -> Instance:
        inst = self._instances.get(instance_id)
        if inst is None:
            raise UnknownId(f"unknown instance: {instance_id}", subject=instance_id)
        return inst

    def connection(self, connection_id: str) -> Connection:
        return self._linker.get(connection_id)

    def connections(self) -> list[Connection]:
        return self._linker.connections()

    def snapshot(self) -> dict:
        with self._state:
            instances = [inst.to_obj() for _, inst in sorted(self._instances.items())]
            instances += [
                inst.to_obj()
                for inst in sorted(self._retiring, key=lambda i: (i.instance_id, i.incarnation))
            ]
            return {
                "app": self.app_name,
                "components": [
                    {
                        "component": c.descriptor.component,
                        "version": c.descriptor.version,
                        "digest": c.digest,
                        "payload": c.descriptor.payload_kind,
                        "provides": [
                            {"port": p.port, "kind": p.kind.value}
                            for p in c.descriptor.provides
                        ],
                        "requires": [
                            {"port": p.port, "kind": p.kind.value}
                            for p in c.descriptor.requires
                        ],
                    }
                    for _, c in sorted(self._components.items())
                ],
                "instances": instances,
                "connections": [c.to_obj() for c in self._linker.connections()],
                "events": [e.to_obj() for e in self.events.tail(50)],
            }

    def graph(self) -> dict:
        with self._state:
            # seq positions this snapshot in the event log so stream
            # consumers can resume without replaying history
            return {
                "seq": self.events.latest_seq,
                "nodes": [inst.to_obj() for _, inst in sorted(self._instances.items())],
                "edges": [c.to_obj() for c in self._linker.connections()],
            }

    def export_ism_model(self, context: ChangeContext = ChangeContext.STATIC) -> SystemModel:
        """Model the live wiring for impact analysis.

        Instances become modules whose services are their port names;
        connections become pseudo-modules with a "config" service. Connections
        absorb coupling, so the only built-in rules are intra-module ones for
        adapter-bearing connections. A component manifest declaring
        `direct_calls` (a connection bypass) contributes the module-to-module
        edges such coupling actually creates, in every context.
        """
        with self._state:
            modules = []
            rules: list[dict] = []
            app = self.app_name
            for iid, inst in sorted(self._instances.items()):
                d = inst.component.descriptor
                services = sorted({p.port for p in d.provides} | {p.port for p in d.requires})
                modules.append({"name": iid, "services": services})
            for conn in self._linker.connections():
                cname = f"conn-{conn.connection_id}"
                modules.append({"name": cname, "services": ["config"]})
                if conn.adapter is not None and context == ChangeContext.STATIC:
                    rules.append({
                        "premise": [f"{app}.{cname}.config"],
                        "consequence": [f"{app}.{cname}.self"],
                    })
            for iid, inst in sorted(self._instances.items()):
                for dep in inst.component.descriptor.direct_calls:
                    for jid, jinst in sorted(self._instances.items()):
                        if jinst.component.descriptor.component == dep and jid != iid:
                            rules.append({
                                "premise": [f"{app}.{jid}.self"],
                                "consequence": [f"{app}.{iid}.self"],
                            })
        spec = {
            "applications": [{"name": app, "modules": modules}],
            "rules": {context.value: rules},
        }
        return build_model(spec)

    # ---------------------------------------------------------------- autoscan

    def start_autoscan(self, interval: float | None = None) -> None:
        if self._autoscan is not None:
            return
        interval = interval if interval is not None else self.scan_interval
        self._autoscan_stop.clear()

        def loop():
            while not self._autoscan_stop.wait(interval):
                try:
                    self.scan_and_apply()
                except PorticoError:
                    pass  # next cycle retries; per-file errors land in events

        self._autoscan = threading.Thread(target=loop, name="portico-autoscan", daemon=True)
        self._autoscan.start()

    def stop_autoscan(self) -> None:
        if self._autoscan is not None:
            self._autoscan_stop.set()
            self._autoscan.join()
            self._autoscan = None
