"""Change propagation: direct impact, fixpoint closure, scope projection."""

from __future__ import annotations

from typing import Iterable

from ..errors import UnknownId
from .model import ModuleId, Rule, ServiceId, SystemModel, SELF_SERVICE


def expand_module_change(
    model: SystemModel, m: ModuleId, services: Iterable[ServiceId] | None = None
) -> frozenset[ServiceId]:
    """Seed change set for a module change: the named services plus its self.

    With no services given, the whole module is treated as changed (all of
    its services including self).
    """
    if not model.has_module(m):
        raise UnknownId(f"unknown module: {m.render()}", subject=m.render())
    self_sid = ServiceId(m.aname, m.mname, SELF_SERVICE)
    if services is None:
        return model.module_services(m) | {self_sid}
    seed = set(services)
    for sid in seed:
        if not model.has_service(sid):
            raise UnknownId(f"unknown service: {sid.render()}", subject=sid.render())
    seed.add(self_sid)
    return frozenset(seed)


def direct_impact(changes: frozenset[ServiceId], rules: Iterable[Rule]) -> frozenset[ServiceId]:
    """First-hop consequences of the change set, excluding what already changed."""
    hit: set[ServiceId] = set()
    for rule in rules:
        if rule.premise <= changes:
            hit |= rule.consequence
    return frozenset(hit - changes)


def closure_trace(
    changes: Iterable[ServiceId], rules: Iterable[Rule]
) -> list[frozenset[ServiceId]]:
    """Worklist frontiers: element 0 is the seed, each later element one pass.

    The closure is the union of all frontiers; the trace length bounds the
    iteration count (each pass adds at least one service or stops).
    """
    rules = tuple(rules)
    current = frozenset(changes)
    trace = [current]
    acc = set(current)
    while True:
        new = direct_impact(frozenset(acc), rules)
        if not new:
            return trace
        acc |= new
        trace.append(new)


def impact_closure(
    changes: Iterable[ServiceId], rules: Iterable[Rule]
) -> frozenset[ServiceId]:
    """Least fixpoint of direct impact over the seed changes."""
    result: set[ServiceId] = set()
    for frontier in closure_trace(changes, rules):
        result |= frontier
    return frozenset(result)


def scope(changes: Iterable[ServiceId]) -> frozenset[ServiceId]:
    """Services appearing in a change set (identity on the set representation)."""
    return frozenset(changes)
