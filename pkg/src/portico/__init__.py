"""portico: a single-process, hot-swappable component platform.

Components expose ports typed by a fixed set of universal interface kinds and
interact only through connections, which can run reconciliation adapters. An
embedded impact-scope engine certifies how independent the resulting modules
actually are.
"""

from .errors import PorticoError
from .interfaces import InterfaceKind, PortHandle, methods_of
from .values import KeyPath, Table, decode_value, encode_value, values_equal

__version__ = "0.1.0"

__all__ = [
    "InterfaceKind",
    "KeyPath",
    "PortHandle",
    "PorticoError",
    "Table",
    "decode_value",
    "encode_value",
    "methods_of",
    "values_equal",
    "__version__",
]
