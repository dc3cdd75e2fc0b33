"""Package files, manifests, config parsing, parameter validation."""

import json

import pytest

from portico.errors import ConfigValidation, MalformedManifest, UnreadableDirectory
from portico.interfaces import InterfaceKind
from portico.runtime.packaging import (
    parse_adapter_spec,
    parse_connection_config,
    parse_instance_config,
    parse_manifest,
    read_package,
    scan_directory,
    validate_params,
    write_package,
)

GOOD_MANIFEST = {
    "component": "echo",
    "version": "1.0.0",
    "payload": {"kind": "source", "entry": "payload.py"},
    "provides": [{"port": "main", "kind": "Processor"}],
    "requires": [],
    "config_schema": {},
}

PAYLOAD = "def create(env):\n    class Echo:\n        def process(self, v):\n            return v\n    return Echo()\n"


def test_package_round_trip(tmp_path):
    path = write_package(tmp_path / "echo-1.0.0.pkg", GOOD_MANIFEST, PAYLOAD)
    descriptor, source, digest = read_package(path)
    assert descriptor.ref == "echo@1.0.0"
    assert descriptor.provides[0].kind == InterfaceKind.PROCESSOR
    assert source == PAYLOAD
    assert len(digest) == 64


def test_manifest_missing_provides_is_malformed():
    manifest = dict(GOOD_MANIFEST)
    del manifest["provides"]
    with pytest.raises(MalformedManifest) as exc:
        parse_manifest(manifest, "broken.pkg")
    assert "provides" in str(exc.value)
    assert "broken.pkg" in str(exc.value)


def test_manifest_validation_errors():
    bad_version = dict(GOOD_MANIFEST, version="1.0")
    with pytest.raises(MalformedManifest):
        parse_manifest(bad_version, "x")
    bad_kind = dict(GOOD_MANIFEST, provides=[{"port": "main", "kind": "Frobnicator"}])
    with pytest.raises(MalformedManifest):
        parse_manifest(bad_kind, "x")
    bad_id = dict(GOOD_MANIFEST, component="No.Dots")
    with pytest.raises(MalformedManifest):
        parse_manifest(bad_id, "x")
    dup_port = dict(GOOD_MANIFEST, provides=[
        {"port": "main", "kind": "Processor"}, {"port": "main", "kind": "Thing"}])
    with pytest.raises(MalformedManifest):
        parse_manifest(dup_port, "x")


def test_non_zip_package_is_malformed(tmp_path):
    path = tmp_path / "junk.pkg"
    path.write_bytes(b"not a zip at all")
    with pytest.raises(MalformedManifest):
        read_package(path)


def test_scan_directory_missing_root(tmp_path):
    with pytest.raises(UnreadableDirectory):
        scan_directory(tmp_path / "nope")


def test_scan_directory_names_offending_file(tmp_path):
    comp = tmp_path / "components"
    comp.mkdir()
    manifest = dict(GOOD_MANIFEST)
    del manifest["provides"]
    write_package(comp / "echo-1.0.0.pkg", manifest, PAYLOAD)
    with pytest.raises(MalformedManifest) as exc:
        scan_directory(tmp_path)
    assert "echo-1.0.0.pkg" in str(exc.value)


def test_instance_config_file_name_must_match(tmp_path):
    (tmp_path / "config" / "instances").mkdir(parents=True)
    (tmp_path / "config" / "instances" / "other.json").write_text(json.dumps({
        "instance": "echo", "component": "echo@1.0.0",
    }))
    with pytest.raises(MalformedManifest):
        scan_directory(tmp_path)


def test_parse_instance_config():
    cfg = parse_instance_config(
        {"instance": "echo", "component": "echo@1.0.0", "parameters": {"a": 1}}, "x")
    assert cfg.instance_id == "echo"
    assert cfg.component_ref == "echo@1.0.0"
    assert cfg.parameters == {"a": 1}
    with pytest.raises(MalformedManifest):
        parse_instance_config({"instance": "echo", "component": "echo"}, "x")


def test_parse_connection_config():
    cfg = parse_connection_config(
        {"from": "a:out", "to": "b:main", "adapter": None}, "a-out", "x")
    assert (cfg.from_instance, cfg.from_port) == ("a", "out")
    assert cfg.adapter is None
    with pytest.raises(MalformedManifest):
        parse_connection_config({"from": "a", "to": "b:main"}, "c", "x")


def test_parse_adapter_spec_variants():
    spec = parse_adapter_spec({"script": "def process(v, c): return v",
                               "parameters": {"x": 1}}, "c")
    assert spec.script and spec.component is None and spec.parameters == {"x": 1}
    spec = parse_adapter_spec({"component": "mon@1.0.0"}, "c")
    assert spec.component == "mon@1.0.0"
    assert parse_adapter_spec(None, "c") is None
    with pytest.raises(MalformedManifest):
        parse_adapter_spec({"script": "x", "component": "y@1.0.0"}, "c")
    with pytest.raises(MalformedManifest):
        parse_adapter_spec({}, "c")


def test_validate_params_names_field():
    schema = {
        "docs": {"type": "rec", "required": False, "default": {}},
        "limit": {"type": "int", "required": True},
    }
    merged = validate_params(schema, {"limit": 3}, "inst")
    assert merged == {"docs": {}, "limit": 3}
    with pytest.raises(ConfigValidation) as exc:
        validate_params(schema, {}, "inst")
    assert exc.value.field == "limit"
    with pytest.raises(ConfigValidation) as exc:
        validate_params(schema, {"limit": "three"}, "inst")
    assert exc.value.field == "limit"
    with pytest.raises(ConfigValidation) as exc:
        validate_params(schema, {"limit": 3, "ghost": 1}, "inst")
    assert exc.value.field == "ghost"
    with pytest.raises(ConfigValidation):
        validate_params({"flag": {"type": "int"}}, {"flag": True}, "inst")
