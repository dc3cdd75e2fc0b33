"""The shipped demo application: a keyword-search pipeline.

Components: userinterface (unary front), search v1 (unary) / v2 (binary,
directory-scoped), documents (keyed store), formatter (text renderer) and a
monitor interceptor. All of them are sandboxed source payloads packaged as
.pkg files, which is exactly what the hot-swap machinery exercises.

``build_demo_workspace`` lays out a scannable deploy directory; booting it
gives four active instances wired as
userinterface -> search, userinterface -> formatter, search -> documents.
"""

from __future__ import annotations

from pathlib import Path

from ..runtime.container import Container
from ..runtime.packaging import write_package
import json

_PAYLOADS = Path(__file__).parent / "payloads"

# Document corpus for every derived count in the test suite: token counts are
# reproducible with a plain whitespace tokenizer.
CORPUS: dict[str, str] = {
    "searchPath/a.txt": "cat dog",
    "searchPath/b.txt": "cat cat",
}

FIXTURE_KEYWORDS: tuple[str, ...] = ("cat", "dog", "zzz", "")

SEARCH_DIR = "searchPath"

# Bridges a unary caller to the binary search port; the directory is
# assemble-time configuration, not code.
ADAPTER_UNARY_TO_BINARY = """\
def process(value, context):
    return context.resolve("next").perform(value, context.parameters["dir"])
"""

# The reverse bridge: a binary caller against a unary target drops the
# second argument.
ADAPTER_BINARY_TO_UNARY = """\
def process(value, context):
    return context.resolve("next").process(value[0])
"""

ADAPTER_IDENTITY = """\
def process(value, context):
    return context.forward()
"""


def payload_source(name: str) -> str:
    return (_PAYLOADS / f"{name}.py").read_text()


MANIFESTS: dict[str, dict] = {
    "userinterface-1.0.0": {
        "component": "userinterface",
        "version": "1.0.0",
        "payload": {"kind": "source", "entry": "payload.py"},
        "provides": [{"port": "app", "kind": "Processor"}],
        "requires": [
            {"port": "finder", "kind": "Processor"},
            {"port": "formatter", "kind": "Processor"},
        ],
        "config_schema": {},
    },
    "search-1.0.0": {
        "component": "search",
        "version": "1.0.0",
        "payload": {"kind": "source", "entry": "payload.py"},
        "provides": [{"port": "search", "kind": "Processor"}],
        "requires": [{"port": "documents", "kind": "ListableResource"}],
        "config_schema": {},
    },
    "search-2.0.0": {
        "component": "search",
        "version": "2.0.0",
        "payload": {"kind": "source", "entry": "payload.py"},
        "provides": [{"port": "search", "kind": "BiProcessor"}],
        "requires": [{"port": "documents", "kind": "ListableResource"}],
        "config_schema": {},
    },
    "documents-1.0.0": {
        "component": "documents",
        "version": "1.0.0",
        "payload": {"kind": "source", "entry": "payload.py"},
        "provides": [{"port": "docs", "kind": "ListableResource"}],
        "requires": [],
        "config_schema": {"docs": {"type": "rec", "required": False, "default": {}}},
    },
    "formatter-1.0.0": {
        "component": "formatter",
        "version": "1.0.0",
        "payload": {"kind": "source", "entry": "payload.py"},
        "provides": [{"port": "format", "kind": "Processor"}],
        "requires": [],
        "config_schema": {"template": {"type": "text", "required": False, "default": ""}},
    },
    "monitor-1.0.0": {
        "component": "monitor",
        "version": "1.0.0",
        "payload": {"kind": "source", "entry": "payload.py"},
        "provides": [
            {"port": "tap", "kind": "Processor"},
            {"port": "tally", "kind": "Processor"},
        ],
        "requires": [{"port": "out", "kind": "Processor"}],
        "config_schema": {},
    },
}

_PAYLOAD_FOR = {
    "userinterface-1.0.0": "userinterface",
    "search-1.0.0": "search_v1",
    "search-2.0.0": "search_v2",
    "documents-1.0.0": "documents",
    "formatter-1.0.0": "formatter",
    "monitor-1.0.0": "monitor",
}

INSTANCES: dict[str, dict] = {
    "userinterface": {"instance": "userinterface", "component": "userinterface@1.0.0"},
    "search": {"instance": "search", "component": "search@1.0.0"},
    "documents": {
        "instance": "documents",
        "component": "documents@1.0.0",
        "parameters": {"docs": CORPUS},
    },
    "formatter": {"instance": "formatter", "component": "formatter@1.0.0"},
}

CONNECTIONS: dict[str, dict] = {
    "userinterface-finder": {"from": "userinterface:finder", "to": "search:search"},
    "userinterface-formatter": {"from": "userinterface:formatter", "to": "formatter:format"},
    "search-documents": {"from": "search:documents", "to": "documents:docs"},
}

# The rebind plan a v1 -> v2 search swap needs: the one inbound connection
# picks up the unary-to-binary adapter.
SWAP_REBIND_PLAN: list[dict] = [
    {
        "connection": "userinterface-finder",
        "to_port": "search",
        "adapter": {"script": ADAPTER_UNARY_TO_BINARY, "parameters": {"dir": SEARCH_DIR}},
    }
]


def build_demo_workspace(root: str | Path) -> Path:
    """Write the demo deploy directory (packages plus configs) under root."""
    root = Path(root)
    for name, manifest in MANIFESTS.items():
        write_package(
            root / "components" / f"{name}.pkg",
            manifest,
            payload_source(_PAYLOAD_FOR[name]),
        )
    inst_dir = root / "config" / "instances"
    inst_dir.mkdir(parents=True, exist_ok=True)
    for iid, cfg in INSTANCES.items():
        (inst_dir / f"{iid}.json").write_text(json.dumps(cfg, indent=2))
    conn_dir = root / "config" / "connections"
    conn_dir.mkdir(parents=True, exist_ok=True)
    for cid, cfg in CONNECTIONS.items():
        (conn_dir / f"{cid}.json").write_text(json.dumps(cfg, indent=2))
    return root


def boot_demo(root: str | Path, app_name: str = "search", **container_kwargs) -> Container:
    """Build the workspace if needed, scan it and bring everything up."""
    root = Path(root)
    if not (root / "components").is_dir():
        build_demo_workspace(root)
    container = Container(app_name=app_name, root=root, **container_kwargs)
    container.scan_and_apply()
    return container


def count_tokens(corpus: dict[str, str], keyword: str) -> int:
    """Independent oracle for every derived count: brute-force token scan."""
    return sum(text.split().count(keyword) for text in corpus.values())
