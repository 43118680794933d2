"""Causal-perturbation task: labeled DAGs, forward effects, exact enumeration.

Nodes are indexed 0..n-1 and carry fixed letter labels A, B, C, ...  An
observation records which nodes reacted to a single-node perturbation; a
candidate graph explains the data iff its descendant sets reproduce every
observed reaction vector exactly.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass

from .errors import ConstraintViolation, EnumerationLimit, ParseFailure

MAX_ENUM_NODES = 6

_EDGE_RE = re.compile(r"^([A-Z])>([A-Z])$")


def node_label(index: int) -> str:
    """Fixed letter label for a node index (0 -> 'A')."""
    if not 0 <= index < 26:
        raise ValueError(f"node index {index} out of label range")
    return chr(ord("A") + index)


def label_index(label: str) -> int:
    if len(label) != 1 or not "A" <= label <= "Z":
        raise ValueError(f"bad node label {label!r}")
    return ord(label) - ord("A")


def _is_acyclic(n: int, edges: frozenset[tuple[int, int]]) -> bool:
    children: dict[int, list[int]] = {i: [] for i in range(n)}
    indeg = [0] * n
    for i, j in edges:
        children[i].append(j)
        indeg[j] += 1
    stack = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    while stack:
        u = stack.pop()
        seen += 1
        for v in children[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    return seen == n


@dataclass(frozen=True)
class Dag:
    """Labeled directed acyclic graph on nodes 0..n-1."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(self.edges))
        for i, j in self.edges:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ConstraintViolation(f"edge ({i},{j}) outside 0..{self.n - 1}")
            if i == j:
                raise ConstraintViolation(f"self-loop on node {node_label(i)}")
        if not _is_acyclic(self.n, self.edges):
            raise ConstraintViolation("edge set contains a cycle")


@dataclass(frozen=True)
class InterventionObservation:
    """One perturbation: ``source`` was intervened on, ``effect`` is the 0/1
    reaction vector over all nodes (source position is 0 by definition)."""

    source: int
    effect: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "effect", tuple(int(b) for b in self.effect))
        if not 0 <= self.source < len(self.effect):
            raise ValueError("observation source outside effect vector")
        if any(b not in (0, 1) for b in self.effect):
            raise ValueError("effect entries must be 0/1")
        if self.effect[self.source] != 0:
            raise ValueError("effect at the intervened node must be 0")


def descendants(dag: Dag, node: int) -> set[int]:
    """Transitive reachability set of ``node``, excluding the node itself."""
    if not 0 <= node < dag.n:
        raise ValueError(f"node {node} out of range 0..{dag.n - 1}")
    children: dict[int, list[int]] = {i: [] for i in range(dag.n)}
    for i, j in dag.edges:
        children[i].append(j)
    out: set[int] = set()
    stack = list(children[node])
    while stack:
        u = stack.pop()
        if u in out:
            continue
        out.add(u)
        stack.extend(children[u])
    out.discard(node)
    return out


def forward_effect(dag: Dag, node: int) -> tuple[int, ...]:
    """Reaction vector of perturbing ``node``: 1 exactly at its descendants."""
    desc = descendants(dag, node)
    return tuple(1 if j in desc else 0 for j in range(dag.n))


def validate_dag(dag: Dag, observations: list[InterventionObservation] | tuple) -> bool:
    """True iff the graph reproduces every observed reaction vector."""
    for obs in observations:
        if len(obs.effect) != dag.n:
            raise ValueError(
                f"effect length {len(obs.effect)} does not match n={dag.n}"
            )
        if forward_effect(dag, obs.source) != obs.effect:
            return False
    return True


def canon_dag(dag: Dag) -> str:
    """Canonical form: lexicographically sorted labeled edge list.

    Two graphs are the same hypothesis iff their canonical forms are equal.
    """
    return canon_edge_pairs((node_label(i), node_label(j)) for i, j in dag.edges)


def canon_edge_pairs(pairs) -> str:
    return ";".join(sorted({f"{a}>{b}" for a, b in pairs}))


def serialize_dag(dag: Dag) -> str:
    """Render a graph in the emission schema (``EDGES: A>B, B>C``)."""
    return edges_text_from_canon(canon_dag(dag))


def edges_text_from_canon(canon: str) -> str:
    if not canon:
        return "EDGES: none"
    return "EDGES: " + ", ".join(canon.split(";"))


def parse_edges(text: str) -> list[tuple[str, str]]:
    """Parse one ``EDGES:`` line into label pairs.

    Whitespace-insensitive; labels are case-sensitive single letters.
    Raises ParseFailure with the 1-based item position on malformed items.
    """
    compact = "".join(text.split())
    if not compact.startswith("EDGES:"):
        raise ParseFailure("expected a line starting with 'EDGES:'")
    body = compact[len("EDGES:"):]
    if body == "none":
        return []
    if not body:
        raise ParseFailure("empty edge list must be spelled 'EDGES: none'")
    pairs = []
    for pos, item in enumerate(body.split(","), start=1):
        m = _EDGE_RE.match(item)
        if m is None:
            raise ParseFailure(f"bad edge item {item!r}", position=pos)
        pairs.append((m.group(1), m.group(2)))
    return pairs


def dag_from_edge_labels(n: int, pairs: list[tuple[str, str]]) -> Dag:
    """Build a Dag from label pairs; structural problems raise ConstraintViolation."""
    edges = set()
    for a, b in pairs:
        i, j = label_index(a), label_index(b)
        if i >= n or j >= n:
            raise ConstraintViolation(
                f"label outside the {n}-node instance: {a}>{b}"
            )
        edges.add((i, j))
    return Dag(n, frozenset(edges))


def enumerate_admissible_dags(
    observations,
    n: int,
    *,
    max_nodes: int = MAX_ENUM_NODES,
) -> list[Dag]:
    """Exactly the acyclic labeled digraphs consistent with the observations.

    Depth-first search over edge decisions. Pruning: edges out of an observed
    source must stay inside its reaction set (else forbidden), an observed
    descendant no other observed descendant can account for forces a direct
    edge, and partial graphs are cut as soon as included edges overshoot or
    the remaining undecided edges cannot cover a reaction set. Results are
    sorted by canonical form.
    """
    if n > max_nodes:
        raise EnumerationLimit(f"n={n} exceeds enumeration limit {max_nodes}")
    observations = tuple(observations)
    for obs in observations:
        if len(obs.effect) != n:
            raise ValueError("observation effect length does not match n")

    # Reaction target sets per observed source; conflicting repeats are
    # unsatisfiable outright.
    targets: dict[int, frozenset[int]] = {}
    for obs in observations:
        t = frozenset(j for j, bit in enumerate(obs.effect) if bit)
        if obs.source in targets and targets[obs.source] != t:
            return []
        targets[obs.source] = t

    all_edges = [(i, j) for i in range(n) for j in range(n) if i != j]
    forbidden = {
        (i, j) for (i, j) in all_edges if i in targets and j not in targets[i]
    }
    required: set[tuple[int, int]] = set()
    for s, tset in targets.items():
        for j in tset:
            # j must be a direct child of s when no other member of the
            # reaction set could possibly reach it.
            via_possible = any(
                t != j and (t not in targets or j in targets[t]) for t in tset
            )
            if not via_possible:
                required.add((s, j))
    if required & forbidden:
        return []
    if not _is_acyclic(n, frozenset(required)):
        return []

    free = sorted(e for e in all_edges if e not in forbidden and e not in required)
    observed = sorted(targets)

    def reach(edge_set, src):
        children: dict[int, list[int]] = {i: [] for i in range(n)}
        for i, j in edge_set:
            children[i].append(j)
        out: set[int] = set()
        stack = list(children[src])
        while stack:
            u = stack.pop()
            if u in out:
                continue
            out.add(u)
            stack.extend(children[u])
        out.discard(src)
        return out

    results: list[Dag] = []

    def dfs(idx: int, chosen: set[tuple[int, int]]):
        undecided = free[idx:]
        for s in observed:
            if not reach(chosen, s) <= targets[s]:
                return
            if not targets[s] <= reach(list(chosen) + undecided, s):
                return
        if idx == len(free):
            dag = Dag(n, frozenset(chosen))
            if validate_dag(dag, observations):
                results.append(dag)
            return
        edge = free[idx]
        dfs(idx + 1, chosen)
        u, v = edge
        if u not in reach(chosen, v):
            chosen.add(edge)
            dfs(idx + 1, chosen)
            chosen.discard(edge)

    dfs(0, set(required))
    return sorted(results, key=canon_dag)


@dataclass(frozen=True)
class CausalInstance:
    """One generated problem: observations plus the exact admissible set
    (canonical forms, sorted)."""

    n: int
    observations: tuple[InterventionObservation, ...]
    admissible: tuple[str, ...]
    latent: Dag | None = None
    difficulty: str = ""
    instance_id: str = ""
    seed: int | None = None


def random_dag(n: int, rng: random.Random, edge_prob: float = 0.5) -> Dag:
    """Sample a DAG by fixing a random topological order and tossing a coin
    per forward pair."""
    order = list(range(n))
    rng.shuffle(order)
    edges = set()
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < edge_prob:
                edges.add((order[a], order[b]))
    return Dag(n, frozenset(edges))


def generate_causal_instance(
    n: int,
    m: int,
    seed: int,
    *,
    difficulty: str = "",
    instance_id: str = "",
) -> CausalInstance:
    """Sample a latent DAG and m distinct perturbation sources, then enumerate
    every graph consistent with the resulting observations.

    Deterministic in ``seed``; the latent graph is always a member of the
    admissible set.
    """
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    rng = random.Random(seed)
    latent = random_dag(n, rng)
    sources = rng.sample(range(n), m)
    observations = tuple(
        InterventionObservation(s, forward_effect(latent, s)) for s in sources
    )
    dags = enumerate_admissible_dags(observations, n)
    admissible = tuple(canon_dag(d) for d in dags)
    return CausalInstance(
        n=n,
        observations=observations,
        admissible=admissible,
        latent=latent,
        difficulty=difficulty or f"nodes={n}",
        instance_id=instance_id,
        seed=seed,
    )
