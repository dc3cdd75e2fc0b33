"""Shared test oracles and generators, independent of the code they check."""

from __future__ import annotations

import random
import string
from collections import deque

from portico.ism.model import Rule, ServiceId, SystemModel, build_model
from portico.values import KeyPath, Table

# ----------------------------------------------------------- random values

_TEXT_POOL = string.ascii_letters + string.digits + " _-./" + "éßñ中文🦊"


def random_scalar(rng: random.Random):
    pick = rng.randrange(6)
    if pick == 0:
        return None
    if pick == 1:
        return rng.random() < 0.5
    if pick == 2:
        return rng.randint(-(2**63), 2**63 - 1)
    if pick == 3:
        # finite floats only: NaN breaks equality on purpose
        return rng.choice([0.0, -0.0, 1.5, -2.25, 1e300, -1e-300, 3.141592653589793,
                           float(rng.randint(-10**6, 10**6))])
    if pick == 4:
        return "".join(rng.choice(_TEXT_POOL) for _ in range(rng.randrange(0, 12)))
    return bytes(rng.randrange(256) for _ in range(rng.randrange(0, 10)))


def random_keypath(rng: random.Random) -> KeyPath:
    parts = []
    for _ in range(rng.randint(1, 3)):
        part = random_scalar(rng)
        while part is None:
            part = random_scalar(rng)
        parts.append(part)
    return KeyPath(*parts)


def random_value(rng: random.Random, depth: int = 3):
    if depth <= 0 or rng.random() < 0.55:
        return random_scalar(rng)
    pick = rng.randrange(4)
    if pick == 0:
        return [random_value(rng, depth - 1) for _ in range(rng.randrange(0, 5))]
    if pick == 1:
        return {
            "".join(rng.choice(_TEXT_POOL) for _ in range(rng.randrange(0, 8))): random_value(rng, depth - 1)
            for _ in range(rng.randrange(0, 5))
        }
    if pick == 2:
        table = Table()
        for _ in range(rng.randrange(0, 5)):
            table[random_keypath(rng)] = random_value(rng, depth - 1)
        return table
    return random_keypath(rng)


# ----------------------------------------------------------- random models

def random_model_spec(rng: random.Random, max_services: int = 50) -> dict:
    napps = rng.randint(1, 2)
    spec: dict = {"applications": [], "rules": {}}
    total = 0
    for a in range(napps):
        modules = []
        for m in range(rng.randint(1, 5)):
            nserv = rng.randint(0, 5)
            services = [f"svc{m}x{s}" for s in range(nserv)]
            total += nserv + 1
            if total > max_services:
                services = services[: max(0, max_services - total)]
            modules.append({"name": f"mod{m}", "services": services})
        spec["applications"].append({"name": f"app{a}", "modules": modules})
    return spec


def all_sids(spec: dict) -> list[str]:
    sids = []
    for app in spec["applications"]:
        for mod in app["modules"]:
            for svc in mod["services"] + ["self"]:
                sids.append(f"{app['name']}.{mod['name']}.{svc}")
    return sids


def random_rules(rng: random.Random, sids: list[str], max_rules: int,
                 premise_size: int = 1) -> list[dict]:
    rules = []
    for _ in range(rng.randint(0, max_rules)):
        premise = rng.sample(sids, min(len(sids), rng.randint(1, premise_size)))
        consequence = rng.sample(sids, min(len(sids), rng.randint(1, 3)))
        rules.append({"premise": premise, "consequence": consequence})
    return rules


def random_model(rng: random.Random, max_services: int = 50, max_rules: int = 200,
                 premise_size: int = 1, contexts: tuple[str, ...] = ("s",),
                 ) -> tuple[SystemModel, list[ServiceId]]:
    spec = random_model_spec(rng, max_services)
    sids = all_sids(spec)
    spec["rules"] = {ctx: random_rules(rng, sids, max_rules, premise_size) for ctx in contexts}
    model = build_model(spec)
    return model, [ServiceId.parse(s) for s in sids]


# ------------------------------------------------------------- BFS oracle

def bfs_reachability(seeds: set[ServiceId], rules: set[Rule]) -> frozenset[ServiceId]:
    """Closure oracle for single-premise rules: reachability in the rule digraph."""
    adjacency: dict[ServiceId, set[ServiceId]] = {}
    for rule in rules:
        assert len(rule.premise) == 1, "oracle only covers single-premise rules"
        (premise,) = rule.premise
        adjacency.setdefault(premise, set()).update(rule.consequence)
    seen = set(seeds)
    queue = deque(seeds)
    while queue:
        node = queue.popleft()
        for nxt in adjacency.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return frozenset(seen)


# ------------------------------------------------------------ token oracle

def count_tokens(corpus: dict[str, str], keyword: str) -> int:
    """Brute-force keyword counter over a path -> text corpus."""
    total = 0
    for text in corpus.values():
        total += sum(1 for token in text.split() if token == keyword)
    return total
