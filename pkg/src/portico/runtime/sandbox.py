"""Restricted execution of portable source payloads and adapter scripts.

Source payloads and inline adapters run with a curated builtin set: no
import machinery, no file or process access. Everything a payload needs from
the host arrives through its environment object; everything an adapter needs
arrives through its invocation context. This is an isolation convention for
portability, not a security boundary (see Non-goals in the README).
"""

from __future__ import annotations

import builtins

from ..errors import AdapterCompileError, PayloadLoadFailure

SAFE_BUILTINS: dict = {
    name: getattr(builtins, name)
    for name in (
        "abs", "all", "any", "bool", "bytes", "callable", "chr", "dict", "divmod",
        "enumerate", "filter", "float", "format", "frozenset", "getattr", "hasattr",
        "hash", "int", "isinstance", "issubclass", "iter", "len", "list", "map",
        "max", "min", "next", "object", "ord", "pow", "print", "property", "range",
        "repr", "reversed", "round", "set", "setattr", "slice", "sorted", "staticmethod",
        "str", "sum", "tuple", "type", "zip",
        "ArithmeticError", "AssertionError", "AttributeError", "Exception",
        "IndexError", "KeyError", "LookupError", "RuntimeError", "StopIteration",
        "TypeError", "ValueError", "ZeroDivisionError",
        "__build_class__",
    )
}


def _execute(source: str, origin: str) -> dict:
    namespace: dict = {"__builtins__": SAFE_BUILTINS, "__name__": origin}
    code = compile(source, origin, "exec")
    exec(code, namespace)
    return namespace


def load_payload_factory(source: str, origin: str):
    """Compile payload source; returns its create(env) factory.

    Raises PayloadLoadFailure on syntax errors, execution errors or a missing
    factory.
    """
    try:
        namespace = _execute(source, origin)
    except Exception as e:
        raise PayloadLoadFailure(f"{origin}: payload failed to load: {e!r}", subject=origin) from e
    factory = namespace.get("create")
    if not callable(factory):
        raise PayloadLoadFailure(f"{origin}: payload defines no create(env)", subject=origin)
    return factory


def load_adapter_function(source: str, origin: str):
    """Compile an inline adapter script; returns its process(value, context).

    Raises AdapterCompileError, leaving the caller free to keep its previous
    adapter.
    """
    try:
        namespace = _execute(source, origin)
    except Exception as e:
        raise AdapterCompileError(f"{origin}: adapter failed to compile: {e!r}", subject=origin) from e
    fn = namespace.get("process")
    if not callable(fn):
        raise AdapterCompileError(f"{origin}: adapter defines no process(value, context)", subject=origin)
    return fn
