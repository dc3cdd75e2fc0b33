"""Connections between instance ports, with optional reconciliation adapters.

A connection binds one instance's required port to another instance's
provided port. Without an adapter the endpoint kinds must match and calls
forward unchanged. With an adapter, any kind pair is allowed: the adapter is
a unary process function receiving the incoming value plus a context that
resolves "next" to the connection's *current* downstream target (so rebinds
are picked up immediately) and exposes the assemble-time parameters.

Adapters come in two sources: inline scripts (compiled by the sandbox) and
packaged components (instantiated with their own lifecycle, for stateful
reconciliation).

Atomicity: all routing state of a connection (target port, its kind, the
adapter) lives in one immutable :class:`Route` object, and a rebind installs
a new Route with a single reference assignment. An invoker therefore always
works with a consistent target/adapter pair — either the old wiring or the
new, never a mix — and an invoker that loses the race (its pinned target
started draining) rereads the route and retries against the replacement.
"""

from __future__ import annotations

import traceback
from typing import TYPE_CHECKING, Any

from ..errors import (
    AdapterFault,
    DuplicateId,
    InstanceFault,
    KindMismatch,
    PorticoError,
    TargetDraining,
    UnknownEndpoint,
    UnknownId,
    UnknownPort,
)
from ..interfaces import InterfaceKind, PortHandle
from .packaging import AdapterSpec, ConnectionConfig
from .sandbox import load_adapter_function

if TYPE_CHECKING:
    from .container import Container, Port


class CompiledAdapter:
    """An adapter ready to run: inline function or bound component instance."""

    __slots__ = ("spec", "fn", "instance_id", "call_port")

    def __init__(self, spec: AdapterSpec, fn=None, instance_id: str | None = None,
                 call_port: str | None = None):
        self.spec = spec
        self.fn = fn
        self.instance_id = instance_id
        self.call_port = call_port

    @property
    def kind(self) -> str:
        return "script" if self.fn is not None else "component"


class Route:
    """One consistent wiring of a connection; immutable once installed."""

    __slots__ = ("to_instance", "to_port", "to_kind", "adapter", "port", "from_kind")

    def __init__(self, to_instance: str, to_port: str, to_kind: InterfaceKind,
                 adapter: CompiledAdapter | None, port: "Port", from_kind: InterfaceKind):
        self.to_instance = to_instance
        self.to_port = to_port
        self.to_kind = to_kind
        self.adapter = adapter
        self.port = port
        self.from_kind = from_kind


class Connection:
    """Live binding; ``route`` is the single atomic switch point."""

    __slots__ = ("connection_id", "from_instance", "from_port", "_route")

    def __init__(self, connection_id: str, from_instance: str, from_port: str, route: Route):
        self.connection_id = connection_id
        self.from_instance = from_instance
        self.from_port = from_port
        self._route = route

    @property
    def route(self) -> Route:
        return self._route

    @property
    def from_kind(self) -> InterfaceKind:
        return self._route.from_kind

    @property
    def to_instance(self) -> str:
        return self._route.to_instance

    @property
    def to_port(self) -> str:
        return self._route.to_port

    @property
    def to_kind(self) -> InterfaceKind:
        return self._route.to_kind

    @property
    def adapter(self) -> CompiledAdapter | None:
        return self._route.adapter

    def target(self) -> PortHandle:
        route = self._route
        return PortHandle(route.to_instance, route.to_port)

    def to_obj(self) -> dict:
        route = self._route
        return {
            "connection": self.connection_id,
            "from": f"{self.from_instance}:{self.from_port}",
            "to": f"{route.to_instance}:{route.to_port}",
            "adapter": route.adapter.kind if route.adapter else None,
        }


class AdapterContext:
    """What an inline adapter sees: parameters, the incoming call, and "next"."""

    def __init__(self, linker: "Linker", connection: Connection, method: str,
                 args: list, adapter: CompiledAdapter):
        self._linker = linker
        self._connection = connection
        self.method = method
        self.args = list(args)
        self.parameters = dict(adapter.spec.parameters)

    def resolve(self, name: str):
        if name != "next":
            raise KeyError(f"unknown context name: {name!r}")
        return _Downstream(self._linker, self._connection)

    def forward(self) -> Any:
        """Send the original method and args to the downstream endpoint."""
        return self._linker.call_target(self._connection, self.method, self.args)


class _Downstream:
    """Late-bound proxy for the connection's current target port."""

    __slots__ = ("_linker", "_connection")

    def __init__(self, linker: "Linker", connection: Connection):
        self._linker = linker
        self._connection = connection

    def __getattr__(self, method: str):
        if method.startswith("_"):
            raise AttributeError(method)
        linker, connection = self._linker, self._connection

        def call(*args):
            return linker.call_target(connection, method, list(args))

        call.__name__ = method
        return call


class Linker:
    """Owns the connection table; mutations run on the container's lifecycle
    executor under its state lock, reads happen on invoker threads."""

    def __init__(self, container: "Container"):
        self._container = container
        self._connections: dict[str, Connection] = {}
        self._by_source: dict[tuple[str, str], Connection] = {}

    # -- reads (invoker threads) ------------------------------------------

    def get(self, connection_id: str) -> Connection:
        conn = self._connections.get(connection_id)
        if conn is None:
            raise UnknownId(f"unknown connection: {connection_id}", subject=connection_id)
        return conn

    def connection_for(self, instance_id: str, port: str) -> Connection | None:
        return self._by_source.get((instance_id, port))

    def connections(self) -> list[Connection]:
        return sorted(self._connections.values(), key=lambda c: c.connection_id)

    def inbound(self, instance_id: str) -> list[Connection]:
        return [c for c in self.connections() if c.to_instance == instance_id]

    def outbound(self, instance_id: str) -> list[Connection]:
        return [c for c in self.connections() if c.from_instance == instance_id]

    # -- invocation ---------------------------------------------------------

    def invoke_through(self, connection: Connection, method: str, args: list) -> Any:
        """Route a call across a connection, running its adapter if present.

        Works against one route snapshot at a time; when a rebind wins the
        race, the retry starts over with the new route, so the adapter
        decision always matches the target actually reached.
        """
        while True:
            route = connection.route
            if route.adapter is not None:
                return self._run_adapter(connection, route, method, args)
            reserved = self._try_reserve(connection, route)
            if reserved is None:
                continue
            try:
                return self._container.dispatch_on_port(reserved, method, args)
            finally:
                reserved.owner.end()

    def call_target(self, connection: Connection, method: str, args: list) -> Any:
        """Call the connection's current downstream directly (adapter's "next")."""
        while True:
            route = connection.route
            reserved = self._try_reserve(connection, route)
            if reserved is None:
                continue
            try:
                return self._container.dispatch_on_port(reserved, method, args)
            finally:
                reserved.owner.end()

    def _try_reserve(self, connection: Connection, route: Route):
        """Begin a request on the route's pinned target.

        Returns the reserved port, or None when the caller should reread the
        route and retry. Raises when the target is gone for good.
        """
        port = route.port
        if port.owner.try_begin():
            return port
        if connection.route is not route:
            return None  # rebound underneath us; retry with the new route
        current = self._container.live_port(route.to_instance, route.to_port)
        if current is not None and current is not port:
            # Same wiring, replacement incarnation (target was re-created):
            # re-pin and retry. Serialized against lifecycle writers.
            self._container.repin_route(connection, route, current)
            return None
        if current is None:
            raise UnknownPort(
                f"{connection.connection_id}: target "
                f"{route.to_instance}:{route.to_port} is gone",
                subject=connection.connection_id,
            )
        raise TargetDraining(
            f"{connection.connection_id}: target {route.to_instance} is draining "
            "with no replacement",
            subject=route.to_instance,
        )

    def _run_adapter(self, connection: Connection, route: Route, method: str,
                     args: list) -> Any:
        adapter = route.adapter
        value = args[0] if len(args) == 1 else list(args)
        if adapter.fn is not None:
            context = AdapterContext(self, connection, method, args, adapter)
            try:
                return adapter.fn(value, context)
            except PorticoError:
                raise  # downstream faults propagate unchanged
            except Exception as e:
                raise AdapterFault(
                    f"{connection.connection_id}: adapter raised {e!r}",
                    subject=connection.connection_id,
                    diagnostics=traceback.format_exc(limit=5),
                ) from e
        # Packaged adapter: a normal instance whose "next" port is wired to
        # this connection's current target by the container.
        try:
            return self._container.invoke(
                PortHandle(adapter.instance_id, adapter.call_port), "process", [value]
            )
        except InstanceFault as e:
            if e.subject == adapter.instance_id:
                raise AdapterFault(
                    f"{connection.connection_id}: adapter component raised: {e}",
                    subject=connection.connection_id,
                    diagnostics=str(e),
                ) from e
            raise

    # -- mutations (lifecycle executor under the state lock; callers release
    # any displaced component adapter afterwards) -----------------------------

    def create(self, config: ConnectionConfig, adapter: CompiledAdapter | None) -> Connection:
        if config.connection_id in self._connections:
            raise DuplicateId(
                f"connection already exists: {config.connection_id}",
                subject=config.connection_id,
            )
        source = (config.from_instance, config.from_port)
        if source in self._by_source:
            raise DuplicateId(
                f"required port {source[0]}:{source[1]} is already connected "
                f"(by {self._by_source[source].connection_id})",
                subject=config.connection_id,
            )
        from_kind = self._required_kind(config.from_instance, config.from_port)
        route = self._build_route(config.connection_id, config.to_instance,
                                  config.to_port, adapter, from_kind)
        conn = Connection(config.connection_id, config.from_instance,
                          config.from_port, route)
        self._connections[config.connection_id] = conn
        self._by_source[source] = conn
        return conn

    def retarget(self, connection_id: str, to_instance: str, to_port: str,
                 adapter_action: tuple[bool, CompiledAdapter | None],
                 from_kind: InterfaceKind | None = None,
                 ) -> tuple[Connection, CompiledAdapter | None]:
        """Install a new route; returns any displaced adapter."""
        conn = self.get(connection_id)
        old = conn.route
        replace, new_adapter = adapter_action
        adapter = new_adapter if replace else old.adapter
        route = self._build_route(connection_id, to_instance, to_port, adapter,
                                  from_kind or old.from_kind)
        conn._route = route
        return conn, (old.adapter if replace else None)

    def reload_adapter(self, connection_id: str, adapter: CompiledAdapter | None,
                       ) -> tuple[Connection, CompiledAdapter | None]:
        conn = self.get(connection_id)
        old = conn.route
        route = self._build_route(connection_id, old.to_instance, old.to_port,
                                  adapter, old.from_kind)
        conn._route = route
        return conn, old.adapter

    def drop(self, connection_id: str) -> Connection:
        conn = self.get(connection_id)
        del self._connections[connection_id]
        self._by_source.pop((conn.from_instance, conn.from_port), None)
        return conn

    def _build_route(self, connection_id: str, to_instance: str, to_port: str,
                     adapter: CompiledAdapter | None, from_kind: InterfaceKind) -> Route:
        decl = self._container.provided_port_decl(to_instance, to_port)
        port = self._container.live_port(to_instance, to_port)
        if decl is None or port is None:
            raise UnknownEndpoint(
                f"no provided port {to_instance}:{to_port}", subject=f"{to_instance}:{to_port}"
            )
        if adapter is None and from_kind != decl.kind:
            raise KindMismatch(
                f"{connection_id}: {from_kind.value} -> {decl.kind.value} needs an adapter",
                subject=connection_id,
            )
        return Route(to_instance, to_port, decl.kind, adapter, port, from_kind)

    # -- adapter compilation -------------------------------------------------

    def compile_adapter(self, spec: AdapterSpec | None, connection_id: str) -> CompiledAdapter | None:
        """Compile an inline script or bind a packaged adapter component.

        Component binding instantiates a hidden instance, so this must run
        outside the state lock (the lifecycle lock is enough).
        """
        if spec is None:
            return None
        if spec.script is not None:
            fn = load_adapter_function(spec.script, f"<adapter {connection_id}>")
            return CompiledAdapter(spec, fn=fn)
        instance_id, call_port = self._container.bind_adapter_component(
            connection_id, spec, lambda: self.get(connection_id).target()
        )
        return CompiledAdapter(spec, instance_id=instance_id, call_port=call_port)

    def release_adapter(self, adapter: CompiledAdapter | None) -> None:
        if adapter is not None and adapter.instance_id is not None:
            self._container.release_adapter_component(adapter.instance_id)

    # -- endpoint resolution ---------------------------------------------------

    def _required_kind(self, instance_id: str, port: str) -> InterfaceKind:
        decl = self._container.required_port_decl(instance_id, port)
        if decl is None:
            raise UnknownEndpoint(
                f"no required port {instance_id}:{port}", subject=f"{instance_id}:{port}"
            )
        return decl.kind
