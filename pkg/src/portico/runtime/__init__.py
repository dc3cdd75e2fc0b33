"""Component runtime: packaging, sandboxed payloads, container, linker."""

from .container import Container, DeltaReport, Instance, InstanceState, Port
from .events import Action, EventLog, LifecycleEvent
from .linker import AdapterContext, Connection, Linker
from .packaging import (
    AdapterSpec,
    ComponentDescriptor,
    ConnectionConfig,
    InstanceConfig,
    PortDecl,
    parse_connection_config,
    parse_instance_config,
    parse_manifest,
    read_package,
    write_package,
)

__all__ = [
    "Action",
    "AdapterContext",
    "AdapterSpec",
    "ComponentDescriptor",
    "Connection",
    "ConnectionConfig",
    "Container",
    "DeltaReport",
    "EventLog",
    "Instance",
    "InstanceConfig",
    "InstanceState",
    "LifecycleEvent",
    "Linker",
    "Port",
    "PortDecl",
    "parse_connection_config",
    "parse_instance_config",
    "parse_manifest",
    "read_package",
    "write_package",
]
