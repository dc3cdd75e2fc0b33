"""Self-describing values exchanged across every component boundary.

A value is one of: ``None`` (Null), ``bool``, 64-bit ``int``, ``float``,
``str`` (Text), ``bytes``, ``list`` (Seq), ``dict[str, value]`` (Rec) or
:class:`Table` (insertion-ordered map from :class:`KeyPath` to value).
``KeyPath`` itself may also travel inside values (``keys()`` returns a Seq of
them), so the codec treats it as an encodable node.

``encode_value``/``decode_value`` implement a canonical length-prefixed tagged
binary format, documented byte by byte in ``docs/value-encoding.md``. Encoding
is deterministic: Rec entries are emitted in sorted key order, Table entries
in insertion order (Table equality is therefore order-sensitive).
"""

from __future__ import annotations

import struct
from typing import Any, Iterable, Iterator

from .errors import MalformedEncoding

_INT64_MIN = -(2**63)
_INT64_MAX = 2**63 - 1

_SCALAR_TYPES = (bool, int, float, str, bytes)

_TAG_NULL = 0x00
_TAG_BOOL = 0x01
_TAG_INT = 0x02
_TAG_FLOAT = 0x03
_TAG_TEXT = 0x04
_TAG_BYTES = 0x05
_TAG_SEQ = 0x06
_TAG_REC = 0x07
_TAG_TABLE = 0x08
_TAG_KEYPATH = 0x09


class KeyPath:
    """Non-empty sequence of scalar values addressing a Table entry.

    Components are restricted to Bool/Int/Float/Text/Bytes. Equality is
    type-strict (``KeyPath(1) != KeyPath(True)``) so distinctly-typed keys
    never collide in a Table.
    """

    __slots__ = ("_parts",)

    def __init__(self, *parts: Any):
        if len(parts) == 1 and isinstance(parts[0], (tuple, list)):
            parts = tuple(parts[0])
        if not parts:
            raise ValueError("KeyPath must not be empty")
        for p in parts:
            if not isinstance(p, _SCALAR_TYPES):
                raise ValueError(f"KeyPath component must be scalar, got {type(p).__name__}")
        self._parts = tuple(parts)

    @property
    def parts(self) -> tuple:
        return self._parts

    def __iter__(self) -> Iterator:
        return iter(self._parts)

    def __len__(self) -> int:
        return len(self._parts)

    def __getitem__(self, i):
        return self._parts[i]

    def __hash__(self) -> int:
        return hash(tuple((type(p).__name__, p) for p in self._parts))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KeyPath):
            return NotImplemented
        return len(self._parts) == len(other._parts) and all(
            type(a) is type(b) and a == b for a, b in zip(self._parts, other._parts)
        )

    def __repr__(self) -> str:
        return f"KeyPath({', '.join(repr(p) for p in self._parts)})"


class Table:
    """Ordered map from KeyPath to value; iteration follows insertion order.

    Unlike Rec, two tables are equal only when their entries match *in order*,
    which keeps the canonical encoding (insertion order) injective on the
    equality classes.
    """

    __slots__ = ("_entries",)

    def __init__(self, items: Iterable | None = None):
        self._entries: dict[KeyPath, Any] = {}
        if items is not None:
            pairs = items.items() if isinstance(items, (dict, Table)) else items
            for key, value in pairs:
                self[key] = value

    def __setitem__(self, key: KeyPath, value: Any) -> None:
        if not isinstance(key, KeyPath):
            raise TypeError("Table keys must be KeyPath")
        self._entries[key] = value

    def __getitem__(self, key: KeyPath) -> Any:
        return self._entries[key]

    def __delitem__(self, key: KeyPath) -> None:
        del self._entries[key]

    def __contains__(self, key: object) -> bool:
        return key in self._entries

    def get(self, key: KeyPath, default: Any = None) -> Any:
        return self._entries.get(key, default)

    def keys(self):
        return self._entries.keys()

    def values(self):
        return self._entries.values()

    def items(self):
        return self._entries.items()

    def __iter__(self) -> Iterator[KeyPath]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Table):
            return NotImplemented
        if len(self) != len(other):
            return False
        return all(
            ka == kb and values_equal(va, vb)
            for (ka, va), (kb, vb) in zip(self.items(), other.items())
        )

    def __repr__(self) -> str:
        inner = ", ".join(f"{k!r}: {v!r}" for k, v in self.items())
        return f"Table({{{inner}}})"


def values_equal(a: Any, b: Any) -> bool:
    """Type-strict structural equality (``1`` is not ``True`` is not ``1.0``)."""
    if type(a) is not type(b):
        return False
    if isinstance(a, Table):
        return a == b
    if isinstance(a, KeyPath):
        return a == b
    if isinstance(a, list):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, dict):
        return a.keys() == b.keys() and all(values_equal(v, b[k]) for k, v in a.items())
    return a == b


# -- encoding ----------------------------------------------------------------

def encode_value(v: Any) -> bytes:
    """Encode a value into its canonical byte form."""
    out = bytearray()
    _encode(v, out)
    return bytes(out)


def decode_value(b: bytes) -> Any:
    """Decode bytes produced by :func:`encode_value`.

    Raises :class:`MalformedEncoding` on truncation, unknown tags, invalid
    UTF-8 or trailing data.
    """
    if not isinstance(b, (bytes, bytearray)):
        raise MalformedEncoding("expected bytes")
    value, pos = _decode(bytes(b), 0)
    if pos != len(b):
        raise MalformedEncoding(f"{len(b) - pos} trailing bytes after value")
    return value


def _encode(v: Any, out: bytearray) -> None:
    if v is None:
        out.append(_TAG_NULL)
    elif type(v) is bool:
        out.append(_TAG_BOOL)
        out.append(1 if v else 0)
    elif type(v) is int:
        if not _INT64_MIN <= v <= _INT64_MAX:
            raise ValueError(f"Int out of 64-bit signed range: {v}")
        out.append(_TAG_INT)
        out += struct.pack(">q", v)
    elif type(v) is float:
        out.append(_TAG_FLOAT)
        out += struct.pack(">d", v)
    elif type(v) is str:
        data = v.encode("utf-8")
        out.append(_TAG_TEXT)
        out += struct.pack(">I", len(data))
        out += data
    elif type(v) is bytes:
        out.append(_TAG_BYTES)
        out += struct.pack(">I", len(v))
        out += v
    elif type(v) is list:
        out.append(_TAG_SEQ)
        out += struct.pack(">I", len(v))
        for item in v:
            _encode(item, out)
    elif type(v) is dict:
        for key in v:
            if type(key) is not str:
                raise ValueError("Rec keys must be Text")
        out.append(_TAG_REC)
        out += struct.pack(">I", len(v))
        for key in sorted(v):
            _encode(key, out)
            _encode(v[key], out)
    elif isinstance(v, Table):
        out.append(_TAG_TABLE)
        out += struct.pack(">I", len(v))
        for key, value in v.items():
            _encode_keypath(key, out)
            _encode(value, out)
    elif isinstance(v, KeyPath):
        _encode_keypath(v, out)
    else:
        raise ValueError(f"not an encodable value: {type(v).__name__}")


def _encode_keypath(kp: KeyPath, out: bytearray) -> None:
    out.append(_TAG_KEYPATH)
    out += struct.pack(">I", len(kp))
    for part in kp:
        _encode(part, out)


def _take(b: bytes, pos: int, n: int) -> tuple[bytes, int]:
    if pos + n > len(b):
        raise MalformedEncoding("truncated value")
    return b[pos:pos + n], pos + n


def _decode(b: bytes, pos: int) -> tuple[Any, int]:
    raw, pos = _take(b, pos, 1)
    tag = raw[0]
    if tag == _TAG_NULL:
        return None, pos
    if tag == _TAG_BOOL:
        raw, pos = _take(b, pos, 1)
        if raw[0] not in (0, 1):
            raise MalformedEncoding(f"bad bool byte {raw[0]}")
        return raw[0] == 1, pos
    if tag == _TAG_INT:
        raw, pos = _take(b, pos, 8)
        return struct.unpack(">q", raw)[0], pos
    if tag == _TAG_FLOAT:
        raw, pos = _take(b, pos, 8)
        return struct.unpack(">d", raw)[0], pos
    if tag == _TAG_TEXT:
        raw, pos = _take(b, pos, 4)
        raw, pos = _take(b, pos, struct.unpack(">I", raw)[0])
        try:
            return raw.decode("utf-8"), pos
        except UnicodeDecodeError as e:
            raise MalformedEncoding(f"invalid UTF-8 in Text: {e}") from None
    if tag == _TAG_BYTES:
        raw, pos = _take(b, pos, 4)
        raw, pos = _take(b, pos, struct.unpack(">I", raw)[0])
        return raw, pos
    if tag == _TAG_SEQ:
        raw, pos = _take(b, pos, 4)
        items = []
        for _ in range(struct.unpack(">I", raw)[0]):
            item, pos = _decode(b, pos)
            items.append(item)
        return items, pos
    if tag == _TAG_REC:
        raw, pos = _take(b, pos, 4)
        rec: dict[str, Any] = {}
        for _ in range(struct.unpack(">I", raw)[0]):
            key, pos = _decode(b, pos)
            if type(key) is not str:
                raise MalformedEncoding("Rec key is not Text")
            value, pos = _decode(b, pos)
            rec[key] = value
        return rec, pos
    if tag == _TAG_TABLE:
        raw, pos = _take(b, pos, 4)
        table = Table()
        for _ in range(struct.unpack(">I", raw)[0]):
            key, pos = _decode(b, pos)
            if not isinstance(key, KeyPath):
                raise MalformedEncoding("Table key is not a KeyPath")
            value, pos = _decode(b, pos)
            table[key] = value
        return table, pos
    if tag == _TAG_KEYPATH:
        raw, pos = _take(b, pos, 4)
        count = struct.unpack(">I", raw)[0]
        if count == 0:
            raise MalformedEncoding("empty KeyPath")
        parts = []
        for _ in range(count):
            part, pos = _decode(b, pos)
            if part is None or not isinstance(part, _SCALAR_TYPES):
                raise MalformedEncoding("KeyPath component is not scalar")
            parts.append(part)
        return KeyPath(*parts), pos
    raise MalformedEncoding(f"unknown tag 0x{tag:02x}")
