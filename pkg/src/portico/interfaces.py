"""The fixed universal interface set: 15 kinds built from 14 methods.

Kinds are closed — components may only expose ports typed by one of these.
Composed kinds are unions of smaller ones; ``COMPOSITION`` records which, so
tests can verify the arithmetic (``Resource = InputResource | OutputResource``
and so on, with ``Universal`` the union of everything).

Every port additionally answers ``about()`` (the ``Thing`` marker): the
runtime injects a metadata implementation when the payload does not provide
one, so ``conforms(port, Thing)`` holds for every live port.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable


class InterfaceKind(str, Enum):
    PROCESSOR = "Processor"
    BI_PROCESSOR = "BiProcessor"
    TRI_PROCESSOR = "TriProcessor"
    INPUT_RESOURCE = "InputResource"
    OUTPUT_RESOURCE = "OutputResource"
    LISTABLE = "Listable"
    RESOURCE = "Resource"
    READONLY_LISTABLE = "ReadonlyListable"
    LISTABLE_RESOURCE = "ListableResource"
    TRANSACTION = "Transaction"
    TRANSACTION_RESOURCE = "TransactionResource"
    LISTABLE_TRANSACTION = "ListableTransaction"
    EXTENDABLE = "Extendable"
    THING = "Thing"
    UNIVERSAL = "Universal"

    @classmethod
    def parse(cls, name: str) -> "InterfaceKind":
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown interface kind: {name!r}") from None


@dataclass(frozen=True)
class MethodSignature:
    """A method name with its parameter names; the last `optional` may be omitted."""

    name: str
    params: tuple[str, ...] = ()
    optional: int = 0
    returns: bool = True

    @property
    def min_args(self) -> int:
        return len(self.params) - self.optional

    @property
    def max_args(self) -> int:
        return len(self.params)

    def accepts_arity(self, n: int) -> bool:
        return self.min_args <= n <= self.max_args


METHODS: dict[str, MethodSignature] = {
    sig.name: sig
    for sig in (
        MethodSignature("process", ("input",)),
        MethodSignature("perform", ("a", "b")),
        MethodSignature("operate", ("a", "b", "c")),
        MethodSignature("find", ("keypath",)),
        MethodSignature("store", ("keypath", "value"), returns=False),
        MethodSignature("discard", ("keypath",), returns=False),
        MethodSignature("empty", (), returns=False),
        MethodSignature("all", ("prefix",), optional=1),
        MethodSignature("keys", ("prefix",), optional=1),
        MethodSignature("begin", ()),
        MethodSignature("commit", ("token",), returns=False),
        MethodSignature("rollback", ("token",), returns=False),
        MethodSignature("extend", ("name",)),
        MethodSignature("about", ()),
    )
}

_BASE: dict[InterfaceKind, frozenset[str]] = {
    InterfaceKind.PROCESSOR: frozenset({"process"}),
    InterfaceKind.BI_PROCESSOR: frozenset({"perform"}),
    InterfaceKind.TRI_PROCESSOR: frozenset({"operate"}),
    InterfaceKind.INPUT_RESOURCE: frozenset({"find"}),
    InterfaceKind.OUTPUT_RESOURCE: frozenset({"store", "discard", "empty"}),
    InterfaceKind.LISTABLE: frozenset({"all", "keys"}),
    InterfaceKind.TRANSACTION: frozenset({"begin", "commit", "rollback"}),
    InterfaceKind.EXTENDABLE: frozenset({"extend"}),
    InterfaceKind.THING: frozenset({"about"}),
}

# Which kinds are unions of which parts; used both to derive the method sets
# and as the test oracle for the composition arithmetic.
COMPOSITION: dict[InterfaceKind, tuple[InterfaceKind, ...]] = {
    InterfaceKind.RESOURCE: (InterfaceKind.INPUT_RESOURCE, InterfaceKind.OUTPUT_RESOURCE),
    InterfaceKind.READONLY_LISTABLE: (InterfaceKind.INPUT_RESOURCE, InterfaceKind.LISTABLE),
    InterfaceKind.LISTABLE_RESOURCE: (InterfaceKind.RESOURCE, InterfaceKind.LISTABLE),
    InterfaceKind.TRANSACTION_RESOURCE: (InterfaceKind.RESOURCE, InterfaceKind.TRANSACTION),
    InterfaceKind.LISTABLE_TRANSACTION: (InterfaceKind.LISTABLE_RESOURCE, InterfaceKind.TRANSACTION),
}


def _method_names() -> dict[InterfaceKind, frozenset[str]]:
    table = dict(_BASE)
    for kind, parts in COMPOSITION.items():
        names: frozenset[str] = frozenset()
        for part in parts:
            names |= table[part]
        table[kind] = names
    table[InterfaceKind.UNIVERSAL] = frozenset(METHODS)
    return table


_KIND_METHODS: dict[InterfaceKind, frozenset[str]] = _method_names()


def method_names(kind: InterfaceKind) -> frozenset[str]:
    """Names of the methods the given kind carries."""
    return _KIND_METHODS[kind]


def methods_of(kind: InterfaceKind) -> frozenset[MethodSignature]:
    """The canonical method set of a kind."""
    return frozenset(METHODS[name] for name in _KIND_METHODS[kind])


def signature(method: str) -> MethodSignature | None:
    return METHODS.get(method)


def conforms_to(available: Iterable[str], kind: InterfaceKind) -> bool:
    """True when `available` method names answer every method of `kind`."""
    return _KIND_METHODS[kind] <= frozenset(available)


@dataclass(frozen=True)
class PortHandle:
    """Opaque reference to a live endpoint: instance id plus port name.

    Resolution to an actual executing instance happens per invocation, which
    is what lets a handle survive a hot swap of its target.
    """

    instance: str
    port: str

    def render(self) -> str:
        return f"{self.instance}:{self.port}"

    @classmethod
    def parse(cls, text: str) -> "PortHandle":
        instance, sep, port = text.partition(":")
        if not sep or not instance or not port:
            raise ValueError(f"expected 'instance:port', got {text!r}")
        return cls(instance, port)
