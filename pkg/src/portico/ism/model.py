"""Application/module/service model with per-context change-propagation rules.

A system model is a finite three-level hierarchy (applications contain
modules contain services) plus a rule set describing which service changes
drag other services along, split by change context: static ("s"), runtime
("r") and non-runtime ("o"). Every module implicitly carries a reserved
service named ``self`` standing for the module as a whole.

Models are immutable once built; all queries are read-only and safe under
concurrent use.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from ..errors import DanglingRuleReference, DuplicateId, MalformedModel, UnknownId

SELF_SERVICE = "self"


class ChangeContext(str, Enum):
    STATIC = "s"
    RUNTIME = "r"
    NON_RUNTIME = "o"

    @classmethod
    def parse(cls, text: str) -> "ChangeContext":
        try:
            return cls(text)
        except ValueError:
            raise MalformedModel(f"unknown change context: {text!r}") from None


@dataclass(frozen=True, order=True)
class ModuleId:
    aname: str
    mname: str

    def render(self) -> str:
        return f"{self.aname}.{self.mname}"

    @classmethod
    def parse(cls, text: str) -> "ModuleId":
        parts = text.split(".")
        if len(parts) != 2 or not all(parts):
            raise MalformedModel(f"module id must be 'app.module', got {text!r}")
        return cls(*parts)


@dataclass(frozen=True, order=True)
class ServiceId:
    aname: str
    mname: str
    sname: str

    @property
    def module(self) -> ModuleId:
        return ModuleId(self.aname, self.mname)

    def render(self) -> str:
        return f"{self.aname}.{self.mname}.{self.sname}"

    @classmethod
    def parse(cls, text: str) -> "ServiceId":
        parts = text.split(".")
        if len(parts) != 3 or not all(parts):
            raise MalformedModel(f"service id must be 'app.module.service', got {text!r}")
        return cls(*parts)


@dataclass(frozen=True)
class Rule:
    """Premise fires when it is a subset of the current change set."""

    premise: frozenset[ServiceId]
    consequence: frozenset[ServiceId]

    def __post_init__(self):
        if not self.premise or not self.consequence:
            raise MalformedModel("rule premise and consequence must be non-empty")


class RuleSet:
    """Rules registered per individual context; lookup unions over a context set."""

    def __init__(self, per_context: Mapping[ChangeContext, Iterable[Rule]] | None = None):
        table: dict[ChangeContext, frozenset[Rule]] = {}
        for ctx, rules in (per_context or {}).items():
            table[ctx] = frozenset(rules)
        self._per_context = table

    def lookup(self, contexts: Iterable[ChangeContext]) -> frozenset[Rule]:
        rules: frozenset[Rule] = frozenset()
        for ctx in contexts:
            rules |= self._per_context.get(ctx, frozenset())
        return rules

    @property
    def registered_contexts(self) -> frozenset[ChangeContext]:
        """Contexts that carry at least one rule."""
        return frozenset(ctx for ctx, rules in self._per_context.items() if rules)

    def all_rules(self) -> frozenset[Rule]:
        return self.lookup(self._per_context)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RuleSet):
            return NotImplemented
        return self._per_context == other._per_context


class SystemModel:
    """Immutable apps/modules/services hierarchy plus its rule set."""

    def __init__(self, apps: Mapping[str, Mapping[str, Iterable[str]]], rules: RuleSet):
        self._apps: dict[str, dict[str, frozenset[str]]] = {
            aname: {mname: frozenset(snames) for mname, snames in modules.items()}
            for aname, modules in apps.items()
        }
        self.rules = rules
        self._services = frozenset(
            ServiceId(aname, mname, sname)
            for aname, modules in self._apps.items()
            for mname, snames in modules.items()
            for sname in snames
        )

    # -- membership -----------------------------------------------------

    def apps(self) -> frozenset[str]:
        return frozenset(self._apps)

    def modules(self, app: str | None = None) -> frozenset[ModuleId]:
        if app is not None:
            if app not in self._apps:
                raise UnknownId(f"unknown application: {app}", subject=app)
            return frozenset(ModuleId(app, m) for m in self._apps[app])
        return frozenset(
            ModuleId(a, m) for a, modules in self._apps.items() for m in modules
        )

    def services(self) -> frozenset[ServiceId]:
        return self._services

    def has_app(self, aname: str) -> bool:
        return aname in self._apps

    def has_module(self, m: ModuleId) -> bool:
        return m.aname in self._apps and m.mname in self._apps[m.aname]

    def has_service(self, s: ServiceId) -> bool:
        return s in self._services

    def module_services(self, m: ModuleId) -> frozenset[ServiceId]:
        if not self.has_module(m):
            raise UnknownId(f"unknown module: {m.render()}", subject=m.render())
        return frozenset(
            ServiceId(m.aname, m.mname, sname) for sname in self._apps[m.aname][m.mname]
        )

    # -- projection functions --------------------------------------------

    def a_m(self, apps: Iterable[str]) -> frozenset[ModuleId]:
        """Decompose applications into their modules."""
        out: set[ModuleId] = set()
        for a in apps:
            out |= self.modules(a)
        return frozenset(out)

    def m_s(self, modules: Iterable[ModuleId]) -> frozenset[ServiceId]:
        """Decompose modules into their services."""
        out: set[ServiceId] = set()
        for m in modules:
            out |= self.module_services(m)
        return frozenset(out)

    def a_s(self, apps: Iterable[str]) -> frozenset[ServiceId]:
        """Decompose applications into their services."""
        return self.m_s(self.a_m(apps))

    def m_a(self, modules: Iterable[ModuleId]) -> frozenset[str]:
        """Merge modules into their applications."""
        out: set[str] = set()
        for m in modules:
            if not self.has_module(m):
                raise UnknownId(f"unknown module: {m.render()}", subject=m.render())
            out.add(m.aname)
        return frozenset(out)

    def s_m(self, services: Iterable[ServiceId]) -> frozenset[ModuleId]:
        """Merge services into their modules."""
        out: set[ModuleId] = set()
        for s in services:
            if s not in self._services:
                raise UnknownId(f"unknown service: {s.render()}", subject=s.render())
            out.add(s.module)
        return frozenset(out)

    def s_a(self, services: Iterable[ServiceId]) -> frozenset[str]:
        """Merge services into their applications."""
        return self.m_a(self.s_m(services))

    _PROJECTIONS = ("a_m", "m_s", "a_s", "m_a", "s_m", "s_a")

    def project(self, f: str, ids: Iterable) -> frozenset:
        """Dispatch one of the six projection functions by name."""
        if f not in self._PROJECTIONS:
            raise MalformedModel(f"unknown projection: {f!r}")
        return getattr(self, f)(ids)


def build_model(spec: Mapping[str, Any]) -> SystemModel:
    """Materialize a model from its spec dict, adding the implicit self services.

    Raises DuplicateId for repeated names (including an explicit "self"),
    DanglingRuleReference for rules naming unknown services, MalformedModel
    for structural problems.
    """
    if not isinstance(spec, Mapping):
        raise MalformedModel("model spec must be an object")
    apps: dict[str, dict[str, frozenset[str]]] = {}
    for app_obj in _expect_list(spec.get("applications", []), "applications"):
        aname = _expect_name(app_obj.get("name"), "application name")
        if aname in apps:
            raise DuplicateId(f"duplicate application: {aname}", subject=aname)
        modules: dict[str, frozenset[str]] = {}
        for mod_obj in _expect_list(app_obj.get("modules", []), "modules"):
            mname = _expect_name(mod_obj.get("name"), "module name")
            if mname in modules:
                raise DuplicateId(f"duplicate module: {aname}.{mname}", subject=f"{aname}.{mname}")
            snames: set[str] = set()
            for sname in _expect_list(mod_obj.get("services", []), "services"):
                sname = _expect_name(sname, "service name")
                if sname == SELF_SERVICE:
                    raise DuplicateId(
                        f"'{SELF_SERVICE}' is implicit and may not be declared: {aname}.{mname}",
                        subject=f"{aname}.{mname}.{SELF_SERVICE}",
                    )
                if sname in snames:
                    raise DuplicateId(
                        f"duplicate service: {aname}.{mname}.{sname}",
                        subject=f"{aname}.{mname}.{sname}",
                    )
                snames.add(sname)
            snames.add(SELF_SERVICE)
            modules[mname] = frozenset(snames)
        apps[aname] = modules

    known = frozenset(
        ServiceId(a, m, s)
        for a, mods in apps.items()
        for m, snames in mods.items()
        for s in snames
    )

    per_context: dict[ChangeContext, list[Rule]] = {}
    rules_obj = spec.get("rules", {})
    if not isinstance(rules_obj, Mapping):
        raise MalformedModel("rules must be an object keyed by context")
    for ctx_key, rule_list in rules_obj.items():
        ctx = ChangeContext.parse(ctx_key)
        parsed: list[Rule] = []
        for rule_obj in _expect_list(rule_list, f"rules[{ctx_key}]"):
            premise = _parse_sids(rule_obj.get("premise"), known, "premise")
            consequence = _parse_sids(rule_obj.get("consequence"), known, "consequence")
            parsed.append(Rule(premise=premise, consequence=consequence))
        per_context[ctx] = parsed

    return SystemModel(apps, RuleSet(per_context))


def load_model(path: str | Path) -> SystemModel:
    """Read a model spec JSON file and build the model."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise MalformedModel(f"cannot read model file {path}: {e}") from None
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedModel(f"model file {path} is not valid JSON: {e}") from None
    return build_model(spec)


def _expect_list(value: Any, what: str) -> list:
    if not isinstance(value, list):
        raise MalformedModel(f"{what} must be a list")
    return value


def _expect_name(value: Any, what: str) -> str:
    if not isinstance(value, str) or not value or "." in value:
        raise MalformedModel(f"{what} must be a non-empty dot-free string, got {value!r}")
    return value


def _parse_sids(value: Any, known: frozenset[ServiceId], what: str) -> frozenset[ServiceId]:
    items = _expect_list(value if value is not None else [], what)
    if not items:
        raise MalformedModel(f"rule {what} must be non-empty")
    out: set[ServiceId] = set()
    for text in items:
        if not isinstance(text, str):
            raise MalformedModel(f"rule {what} entries must be service id strings")
        sid = ServiceId.parse(text)
        if sid not in known:
            raise DanglingRuleReference(
                f"rule references unknown service: {sid.render()}", subject=sid.render()
            )
        out.add(sid)
    return frozenset(out)
