"""Component packages, manifests and deploy-directory configuration files.

A component ships as ``<id>-<version>.pkg``: a zip holding ``component.json``
(the manifest) plus, for source payloads, the payload module itself. The
deploy directory layout the scanner understands:

    components/<id>-<version>.pkg
    config/instances/<instance_id>.json
    config/connections/<connection_id>.json

Ids are lowercase and dot-free; versions are ``major.minor.patch``. The full
schemas are documented in ``docs/packaging.md``.
"""

from __future__ import annotations

import hashlib
import io
import json
import re
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from ..errors import ConfigValidation, MalformedManifest, UnreadableDirectory
from ..interfaces import InterfaceKind

MANIFEST_NAME = "component.json"
PKG_SUFFIX = ".pkg"

_ID_RE = re.compile(r"^[a-z][a-z0-9_-]*$")
_VERSION_RE = re.compile(r"^\d+\.\d+\.\d+$")

PAYLOAD_SOURCE = "source"
PAYLOAD_BUILTIN = "builtin"


@dataclass(frozen=True)
class PortDecl:
    port: str
    kind: InterfaceKind


@dataclass(frozen=True)
class ComponentDescriptor:
    component: str
    version: str
    payload_kind: str                      # "source" | "builtin"
    payload_ref: str                       # zip entry name | builtin factory name
    provides: tuple[PortDecl, ...]
    requires: tuple[PortDecl, ...]
    config_schema: Mapping[str, Any] = field(default_factory=dict)
    direct_calls: tuple[str, ...] = ()     # declared connection bypasses (legacy coupling)

    @property
    def ref(self) -> str:
        return f"{self.component}@{self.version}"

    def provided(self, port: str) -> PortDecl | None:
        return next((p for p in self.provides if p.port == port), None)

    def required(self, port: str) -> PortDecl | None:
        return next((p for p in self.requires if p.port == port), None)


@dataclass(frozen=True)
class InstanceConfig:
    instance_id: str
    component: str
    version: str
    parameters: Mapping[str, Any] = field(default_factory=dict)
    environment: Mapping[str, Any] = field(default_factory=dict)

    @property
    def component_ref(self) -> str:
        return f"{self.component}@{self.version}"


@dataclass(frozen=True)
class AdapterSpec:
    """Inline script or packaged component reference, plus its parameters."""

    script: str | None = None
    component: str | None = None
    parameters: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ConnectionConfig:
    connection_id: str
    from_instance: str
    from_port: str
    to_instance: str
    to_port: str
    adapter: AdapterSpec | None = None


def parse_id(value: Any, what: str, source: str) -> str:
    if not isinstance(value, str) or not _ID_RE.match(value):
        raise MalformedManifest(
            f"{source}: {what} must be lowercase dot-free id, got {value!r}", subject=source
        )
    return value


def parse_component_ref(value: Any, source: str) -> tuple[str, str]:
    if not isinstance(value, str) or "@" not in value:
        raise MalformedManifest(f"{source}: expected 'component@version', got {value!r}", subject=source)
    component, version = value.split("@", 1)
    parse_id(component, "component id", source)
    if not _VERSION_RE.match(version):
        raise MalformedManifest(f"{source}: bad version {version!r}", subject=source)
    return component, version


def _parse_ports(obj: Any, key: str, source: str) -> tuple[PortDecl, ...]:
    if obj is None:
        raise MalformedManifest(f"{source}: manifest missing {key!r}", subject=source)
    if not isinstance(obj, list):
        raise MalformedManifest(f"{source}: {key} must be a list", subject=source)
    decls: list[PortDecl] = []
    seen: set[str] = set()
    for entry in obj:
        if not isinstance(entry, Mapping) or "port" not in entry or "kind" not in entry:
            raise MalformedManifest(f"{source}: each {key} entry needs port and kind", subject=source)
        port = parse_id(entry["port"], "port name", source)
        try:
            kind = InterfaceKind.parse(entry["kind"])
        except ValueError as e:
            raise MalformedManifest(f"{source}: {e}", subject=source) from None
        if port in seen:
            raise MalformedManifest(f"{source}: duplicate port {port!r} in {key}", subject=source)
        seen.add(port)
        decls.append(PortDecl(port, kind))
    return tuple(decls)


def parse_manifest(obj: Any, source: str) -> ComponentDescriptor:
    if not isinstance(obj, Mapping):
        raise MalformedManifest(f"{source}: manifest must be an object", subject=source)
    component = parse_id(obj.get("component"), "component id", source)
    version = obj.get("version")
    if not isinstance(version, str) or not _VERSION_RE.match(version):
        raise MalformedManifest(f"{source}: bad version {version!r}", subject=source)
    payload = obj.get("payload")
    if not isinstance(payload, Mapping) or payload.get("kind") not in (PAYLOAD_SOURCE, PAYLOAD_BUILTIN):
        raise MalformedManifest(
            f"{source}: payload.kind must be '{PAYLOAD_SOURCE}' or '{PAYLOAD_BUILTIN}'", subject=source
        )
    if payload["kind"] == PAYLOAD_SOURCE:
        ref = payload.get("entry", "payload.py")
        if not isinstance(ref, str) or not ref:
            raise MalformedManifest(f"{source}: payload.entry must be a file name", subject=source)
    else:
        ref = payload.get("factory")
        if not isinstance(ref, str) or not ref:
            raise MalformedManifest(f"{source}: payload.factory must be a name", subject=source)
    schema = obj.get("config_schema", {})
    if not isinstance(schema, Mapping):
        raise MalformedManifest(f"{source}: config_schema must be an object", subject=source)
    direct_calls = obj.get("direct_calls", [])
    if not isinstance(direct_calls, list) or not all(isinstance(c, str) for c in direct_calls):
        raise MalformedManifest(f"{source}: direct_calls must be a list of component ids", subject=source)
    return ComponentDescriptor(
        component=component,
        version=version,
        payload_kind=payload["kind"],
        payload_ref=ref,
        provides=_parse_ports(obj.get("provides"), "provides", source),
        requires=_parse_ports(obj.get("requires", []), "requires", source),
        config_schema=dict(schema),
        direct_calls=tuple(direct_calls),
    )


# -- package files ------------------------------------------------------------

def write_package(path: str | Path, manifest: Mapping[str, Any], payload_source: str | None = None) -> Path:
    """Create a .pkg zip from a manifest dict and optional payload source."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        zf.writestr(MANIFEST_NAME, json.dumps(manifest, indent=2, sort_keys=True))
        if payload_source is not None:
            entry = manifest.get("payload", {}).get("entry", "payload.py")
            zf.writestr(entry, payload_source)
    path.write_bytes(buf.getvalue())
    return path


def read_package_bytes(data: bytes, source_name: str) -> tuple[ComponentDescriptor, str | None, str]:
    """Parse .pkg bytes: descriptor, payload source (if any), content digest."""
    digest = hashlib.sha256(data).hexdigest()
    try:
        zf = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile:
        raise MalformedManifest(f"{source_name}: not a zip package", subject=source_name) from None
    with zf:
        try:
            manifest_raw = zf.read(MANIFEST_NAME)
        except KeyError:
            raise MalformedManifest(
                f"{source_name}: missing {MANIFEST_NAME}", subject=source_name
            ) from None
        try:
            manifest = json.loads(manifest_raw)
        except json.JSONDecodeError as e:
            raise MalformedManifest(
                f"{source_name}: manifest is not valid JSON: {e}", subject=source_name
            ) from None
        descriptor = parse_manifest(manifest, source_name)
        source = None
        if descriptor.payload_kind == PAYLOAD_SOURCE:
            try:
                source = zf.read(descriptor.payload_ref).decode("utf-8")
            except KeyError:
                raise MalformedManifest(
                    f"{source_name}: payload entry {descriptor.payload_ref!r} missing",
                    subject=source_name,
                ) from None
    return descriptor, source, digest


def read_package(path: str | Path) -> tuple[ComponentDescriptor, str | None, str]:
    """Read a .pkg file: descriptor, payload source (if any), content digest."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise MalformedManifest(f"{path}: unreadable package: {e}", subject=str(path)) from None
    return read_package_bytes(data, str(path))


# -- config files --------------------------------------------------------------

def parse_instance_config(obj: Any, source: str) -> InstanceConfig:
    if not isinstance(obj, Mapping):
        raise MalformedManifest(f"{source}: instance config must be an object", subject=source)
    instance_id = parse_id(obj.get("instance"), "instance id", source)
    component, version = parse_component_ref(obj.get("component"), source)
    params = obj.get("parameters", {})
    env = obj.get("environment", {})
    if not isinstance(params, Mapping) or not isinstance(env, Mapping):
        raise MalformedManifest(f"{source}: parameters/environment must be objects", subject=source)
    return InstanceConfig(instance_id, component, version, dict(params), dict(env))


def parse_adapter_spec(obj: Any, source: str) -> AdapterSpec | None:
    if obj is None:
        return None
    if not isinstance(obj, Mapping):
        raise MalformedManifest(f"{source}: adapter must be an object or null", subject=source)
    params = obj.get("parameters", {})
    if not isinstance(params, Mapping):
        raise MalformedManifest(f"{source}: adapter parameters must be an object", subject=source)
    script = obj.get("script")
    component = obj.get("component")
    if (script is None) == (component is None):
        raise MalformedManifest(
            f"{source}: adapter needs exactly one of 'script' or 'component'", subject=source
        )
    if script is not None and not isinstance(script, str):
        raise MalformedManifest(f"{source}: adapter script must be text", subject=source)
    if component is not None:
        parse_component_ref(component, source)
    return AdapterSpec(script=script, component=component, parameters=dict(params))


def parse_connection_config(obj: Any, connection_id: str, source: str) -> ConnectionConfig:
    if not isinstance(obj, Mapping):
        raise MalformedManifest(f"{source}: connection config must be an object", subject=source)
    parse_id(connection_id, "connection id", source)
    ends = {}
    for key in ("from", "to"):
        value = obj.get(key)
        if not isinstance(value, str) or ":" not in value:
            raise MalformedManifest(f"{source}: {key} must be 'instance:port'", subject=source)
        instance, port = value.split(":", 1)
        ends[key] = (parse_id(instance, "instance id", source), parse_id(port, "port name", source))
    adapter = parse_adapter_spec(obj.get("adapter"), source)
    return ConnectionConfig(
        connection_id=connection_id,
        from_instance=ends["from"][0],
        from_port=ends["from"][1],
        to_instance=ends["to"][0],
        to_port=ends["to"][1],
        adapter=adapter,
    )


def config_digest(obj: Any) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()


# -- parameter validation -------------------------------------------------------

_SCHEMA_TYPES = {
    "text": str,
    "int": int,
    "float": float,
    "bool": bool,
    "seq": list,
    "rec": dict,
}


def validate_params(schema: Mapping[str, Any], params: Mapping[str, Any], subject: str) -> dict:
    """Check params against a config schema, applying defaults. Names the bad field."""
    merged: dict[str, Any] = {}
    for name, rule in schema.items():
        if not isinstance(rule, Mapping):
            raise ConfigValidation(f"schema for field {name!r} must be an object", field=name, subject=subject)
        if name in params:
            value = params[name]
            expected = rule.get("type")
            if expected is not None:
                py_type = _SCHEMA_TYPES.get(expected)
                if py_type is None:
                    raise ConfigValidation(f"field {name!r}: unknown schema type {expected!r}", field=name, subject=subject)
                if expected == "int" and isinstance(value, bool):
                    raise ConfigValidation(f"field {name!r}: expected int, got bool", field=name, subject=subject)
                if expected == "float" and isinstance(value, int) and not isinstance(value, bool):
                    value = float(value)
                if not isinstance(value, py_type):
                    raise ConfigValidation(
                        f"field {name!r}: expected {expected}, got {type(value).__name__}",
                        field=name,
                        subject=subject,
                    )
            merged[name] = value
        elif rule.get("required", False):
            raise ConfigValidation(f"missing required field {name!r}", field=name, subject=subject)
        elif "default" in rule:
            merged[name] = rule["default"]
    for name in params:
        if name not in schema:
            raise ConfigValidation(f"unknown field {name!r}", field=name, subject=subject)
    return merged


# -- deploy directory scanning ---------------------------------------------------

@dataclass(frozen=True)
class ScannedPackage:
    path: Path
    descriptor: ComponentDescriptor
    payload_source: str | None
    digest: str


def scan_directory(root: str | Path) -> tuple[
    dict[tuple[str, str], ScannedPackage],
    dict[str, tuple[InstanceConfig, str]],
    dict[str, tuple[ConnectionConfig, str]],
]:
    """Read the full deploy directory; returns packages, instance and connection configs.

    Raises UnreadableDirectory when the root is absent, MalformedManifest for
    any file violating its schema (naming the file).
    """
    root = Path(root)
    if not root.is_dir():
        raise UnreadableDirectory(f"not a directory: {root}", subject=str(root))

    packages: dict[tuple[str, str], ScannedPackage] = {}
    comp_dir = root / "components"
    if comp_dir.is_dir():
        for path in sorted(comp_dir.glob(f"*{PKG_SUFFIX}")):
            descriptor, source, digest = read_package(path)
            key = (descriptor.component, descriptor.version)
            if key in packages:
                raise MalformedManifest(
                    f"{path}: duplicate component {descriptor.ref}", subject=str(path)
                )
            packages[key] = ScannedPackage(path, descriptor, source, digest)

    instances: dict[str, tuple[InstanceConfig, str]] = {}
    for path in sorted((root / "config" / "instances").glob("*.json")) if (root / "config" / "instances").is_dir() else []:
        obj = _read_json(path)
        cfg = parse_instance_config(obj, str(path))
        if cfg.instance_id != path.stem:
            raise MalformedManifest(
                f"{path}: file name must match instance id {cfg.instance_id!r}", subject=str(path)
            )
        instances[cfg.instance_id] = (cfg, config_digest(obj))

    connections: dict[str, tuple[ConnectionConfig, str]] = {}
    for path in sorted((root / "config" / "connections").glob("*.json")) if (root / "config" / "connections").is_dir() else []:
        obj = _read_json(path)
        cfg = parse_connection_config(obj, path.stem, str(path))
        connections[cfg.connection_id] = (cfg, config_digest(obj))

    return packages, instances, connections


def _read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text())
    except OSError as e:
        raise MalformedManifest(f"{path}: unreadable: {e}", subject=str(path)) from None
    except json.JSONDecodeError as e:
        raise MalformedManifest(f"{path}: not valid JSON: {e}", subject=str(path)) from None
