"""Per-instance environment injected into payloads at instantiation.

The environment is the payload's entire view of the host: validated
parameters, a log channel, value-type constructors, and proxies for the
instance's required ports. Required-port calls resolve their connection at
call time, so a relink or swap is picked up by the very next call.
"""

from __future__ import annotations

import logging
from typing import Any, Callable, Mapping

from ..errors import UnboundPort
from ..values import KeyPath, Table

log = logging.getLogger("portico.instance")

# (instance_id, required_port, method, args) -> result
PortInvoker = Callable[[str, str, str, list], Any]


class ValueTypes:
    """Constructors for host value types, reachable from sandboxed payloads."""

    @staticmethod
    def table(items=None) -> Table:
        return Table(items)

    @staticmethod
    def keypath(*parts) -> KeyPath:
        return KeyPath(*parts)


class RequiredPort:
    """Proxy for one required port; attribute access yields method callers."""

    __slots__ = ("_instance_id", "_port", "_invoker")

    def __init__(self, instance_id: str, port: str, invoker: PortInvoker):
        self._instance_id = instance_id
        self._port = port
        self._invoker = invoker

    def __getattr__(self, method: str):
        if method.startswith("_"):
            raise AttributeError(method)
        instance_id, port, invoker = self._instance_id, self._port, self._invoker

        def call(*args):
            return invoker(instance_id, port, method, list(args))

        call.__name__ = method
        return call

    def __repr__(self) -> str:
        return f"RequiredPort({self._instance_id}:{self._port})"


class InstanceEnvironment:
    """What a payload sees of the world."""

    def __init__(
        self,
        instance_id: str,
        component_ref: str,
        parameters: Mapping[str, Any],
        environment: Mapping[str, Any],
        invoker: PortInvoker,
        required_ports: tuple[str, ...],
    ):
        self.instance_id = instance_id
        self.component = component_ref
        self.params = dict(parameters)
        self.environment = dict(environment)
        self.types = ValueTypes()
        self._invoker = invoker
        self._required = frozenset(required_ports)
        self._log = log.getChild(instance_id)
        level = str(self.environment.get("log_level", "")).upper()
        self._log_enabled = level != "OFF"

    def port(self, name: str) -> RequiredPort:
        if name not in self._required:
            raise UnboundPort(
                f"{self.instance_id}: '{name}' is not a declared required port",
                subject=self.instance_id,
            )
        return RequiredPort(self.instance_id, name, self._invoker)

    def log(self, message: str, level: str = "info") -> None:
        if self._log_enabled:
            resolved = logging.getLevelName(level.upper())
            self._log.log(resolved if isinstance(resolved, int) else logging.INFO,
                          "%s", message)

    def about(self) -> dict:
        return {
            "instance": self.instance_id,
            "component": self.component,
        }
