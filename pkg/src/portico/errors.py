"""Error taxonomy shared by the value model, the impact engine and the runtime.

Every error carries a stable machine-readable ``code`` (its class name) and an
optional ``subject`` id so transports (HTTP API, CLI) can map failures without
string matching.
"""

from __future__ import annotations


class PorticoError(Exception):
    """Base class for all platform errors."""

    def __init__(self, message: str, *, subject: str | None = None):
        super().__init__(message)
        self.subject = subject

    @property
    def code(self) -> str:
        return type(self).__name__


# -- value model -------------------------------------------------------------

class MalformedEncoding(PorticoError):
    """Byte stream does not follow the documented value encoding."""


# -- interface set -----------------------------------------------------------

class UnknownPort(PorticoError):
    """A port handle does not resolve to any live endpoint."""


# -- impact model ------------------------------------------------------------

class MalformedModel(PorticoError):
    """System-model spec is structurally invalid (bad names, wrong shapes)."""


class DuplicateId(PorticoError):
    """An application, module or service id is declared twice."""


class DanglingRuleReference(PorticoError):
    """A rule references a service id that is not part of the model."""


class UnknownId(PorticoError):
    """A query names an application/module/service the model does not contain."""


# -- container ---------------------------------------------------------------

class UnreadableDirectory(PorticoError):
    """Scan root is missing or does not match the documented layout."""


class MalformedManifest(PorticoError):
    """A component manifest or config file violates its schema."""


class PayloadLoadFailure(PorticoError):
    """Component payload could not be loaded or compiled."""


class UnknownComponent(PorticoError):
    """Referenced component id@version is not in the repository."""


class ConfigValidation(PorticoError):
    """Instance parameters violate the component's config schema."""

    def __init__(self, message: str, *, field: str | None = None, subject: str | None = None):
        super().__init__(message, subject=subject)
        self.field = field


class DuplicateInstanceId(PorticoError):
    """An instance with the same id is already live."""


class NoSuchMethod(PorticoError):
    """Method name or arity does not match the port's interface kind."""


class TargetDraining(PorticoError):
    """Invocation hit a draining instance that has no replacement."""


class InstanceFault(PorticoError):
    """Application-level error raised by a component, tagged with its instance."""


class RebindIncomplete(PorticoError):
    """A swap plan does not cover every connection touching the instance."""


class IllegalTransition(PorticoError):
    """Requested lifecycle action is not legal in the current state."""


class UnboundPort(PorticoError):
    """A required port was invoked before any connection was bound to it."""


# -- linker ------------------------------------------------------------------

class KindMismatch(PorticoError):
    """Connection endpoints expose different interface kinds and no adapter."""


class UnknownEndpoint(PorticoError):
    """Connection config names an instance or port that does not exist."""


class AdapterFault(PorticoError):
    """Adapter raised while reconciling a request."""

    def __init__(self, message: str, *, subject: str | None = None, diagnostics: str | None = None):
        super().__init__(message, subject=subject)
        self.diagnostics = diagnostics


class AdapterCompileError(PorticoError):
    """Adapter script failed to compile; the previous adapter stays active."""


# -- control plane -----------------------------------------------------------

class CursorTooOld(PorticoError):
    """Event cursor points before the retained window."""


class BindFailure(PorticoError):
    """HTTP control plane could not bind its address."""
