"""Independence certification built on the impact closure.

Quantification note: the definitions of complete/absolute independence range
over *every* rule set, which is not enumerable. Certification therefore
quantifies over all non-empty subsets of the contexts that actually carry
rules in the model, and every report states which contexts were examined.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable

from ..errors import UnknownId
from .closure import expand_module_change, impact_closure, scope
from .model import ChangeContext, ModuleId, ServiceId, SystemModel


def context_subsets(model: SystemModel) -> list[frozenset[ChangeContext]]:
    """Non-empty subsets of the model's registered (rule-bearing) contexts."""
    registered = sorted(model.rules.registered_contexts, key=lambda c: c.value)
    subsets: list[frozenset[ChangeContext]] = []
    for size in range(1, len(registered) + 1):
        subsets.extend(frozenset(c) for c in combinations(registered, size))
    return subsets


def impacted_modules(
    model: SystemModel, mi: ModuleId, contexts: Iterable[ChangeContext]
) -> frozenset[ModuleId]:
    """Modules reached by a whole-module change to `mi` under R(contexts)."""
    seed = expand_module_change(model, mi)
    rules = model.rules.lookup(contexts)
    return model.s_m(scope(impact_closure(seed, rules)))


def is_independent(
    model: SystemModel, mi: ModuleId, mj: ModuleId, contexts: Iterable[ChangeContext]
) -> bool:
    """True when a change to mi cannot reach mj under the given context set."""
    if mi == mj:
        raise UnknownId("independence is defined for distinct modules", subject=mi.render())
    if not model.has_module(mj):
        raise UnknownId(f"unknown module: {mj.render()}", subject=mj.render())
    return mj not in impacted_modules(model, mi, contexts)


def is_completely_independent(model: SystemModel, mi: ModuleId, mj: ModuleId) -> bool:
    """Independent under every registered context subset."""
    return all(is_independent(model, mi, mj, x) for x in context_subsets(model))


def is_absolutely_independent(model: SystemModel, mi: ModuleId) -> bool:
    """Changes to mi never reach any other module of its own application."""
    if not model.has_module(mi):
        raise UnknownId(f"unknown module: {mi.render()}", subject=mi.render())
    own_app_modules = model.a_m([mi.aname])
    for x in context_subsets(model):
        if impacted_modules(model, mi, x) & own_app_modules != {mi}:
            return False
    return True


def is_ideal_system(model: SystemModel, app: str) -> bool:
    """Every module of the application is absolutely independent."""
    if not model.has_app(app):
        raise UnknownId(f"unknown application: {app}", subject=app)
    return all(is_absolutely_independent(model, m) for m in model.a_m([app]))


# -- report payloads (shared verbatim by the CLI and the HTTP API) -----------

def scope_report(
    model: SystemModel,
    contexts: Iterable[ChangeContext],
    changes: Iterable[ServiceId],
) -> dict:
    """Impact scope of a change set: services, then module/app projections."""
    contexts = sorted(set(contexts), key=lambda c: c.value)
    seed = scope(changes)
    for sid in seed:
        if not model.has_service(sid):
            raise UnknownId(f"unknown service: {sid.render()}", subject=sid.render())
    closure = impact_closure(seed, model.rules.lookup(contexts))
    return {
        "contexts": [c.value for c in contexts],
        "changes": sorted(s.render() for s in seed),
        "services": sorted(s.render() for s in closure),
        "modules": sorted(m.render() for m in model.s_m(closure)),
        "applications": sorted(model.s_a(closure)),
    }


def certify_report(model: SystemModel, module: ModuleId | None = None) -> dict:
    """Certification verdicts; states the examined contexts explicitly."""
    contexts = sorted(model.rules.registered_contexts, key=lambda c: c.value)
    report: dict = {
        "contexts": [c.value for c in contexts],
        "applications": [
            {"name": app, "ideal": is_ideal_system(model, app)}
            for app in sorted(model.apps())
        ],
        "modules": [
            {"id": m.render(), "absolutely_independent": is_absolutely_independent(model, m)}
            for m in sorted(model.modules())
        ],
    }
    if module is not None:
        if not model.has_module(module):
            raise UnknownId(f"unknown module: {module.render()}", subject=module.render())
        pairs = []
        for other in sorted(model.modules(module.aname)):
            if other == module:
                continue
            pairs.append(
                {
                    "module": module.render(),
                    "other": other.render(),
                    "independent": {
                        c.value: is_independent(model, module, other, [c]) for c in contexts
                    },
                    "completely_independent": is_completely_independent(model, module, other),
                }
            )
        report["pairs"] = pairs
    return report
