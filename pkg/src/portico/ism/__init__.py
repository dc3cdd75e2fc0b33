"""Impact-scope engine: system model, change closure, independence certification."""

from .model import (
    ChangeContext,
    ModuleId,
    Rule,
    RuleSet,
    ServiceId,
    SystemModel,
    SELF_SERVICE,
    build_model,
    load_model,
)
from .closure import (
    closure_trace,
    direct_impact,
    expand_module_change,
    impact_closure,
    scope,
)
from .certify import (
    certify_report,
    context_subsets,
    impacted_modules,
    is_absolutely_independent,
    is_completely_independent,
    is_ideal_system,
    is_independent,
    scope_report,
)

__all__ = [
    "ChangeContext",
    "ModuleId",
    "Rule",
    "RuleSet",
    "ServiceId",
    "SystemModel",
    "SELF_SERVICE",
    "build_model",
    "load_model",
    "closure_trace",
    "direct_impact",
    "expand_module_change",
    "impact_closure",
    "scope",
    "certify_report",
    "context_subsets",
    "impacted_modules",
    "is_absolutely_independent",
    "is_completely_independent",
    "is_ideal_system",
    "is_independent",
    "scope_report",
]
