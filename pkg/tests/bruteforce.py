"""Independent brute-force oracles used to check the exact enumerators.

These deliberately avoid the package's search/closure code paths: acyclicity
via Kahn's algorithm, reachability via plain BFS over adjacency lists, voxel
checks via explicit per-column loops, Boolean spaces via naive recursive tree
generation, truth tables via a standalone evaluator.
"""

import itertools

import numpy as np

from hyposet.boolexpr import Const, Not, Op, Var, canon_expr, expr_key
from hyposet.causal import Dag, canon_dag


def _kahn_acyclic(n, edges):
    indeg = {i: 0 for i in range(n)}
    children = {i: [] for i in range(n)}
    for i, j in edges:
        children[i].append(j)
        indeg[j] += 1
    queue = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    while queue:
        u = queue.pop()
        seen += 1
        for v in children[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return seen == n


def _bfs_reach(n, edges, src):
    children = {i: [] for i in range(n)}
    for i, j in edges:
        children[i].append(j)
    out = set()
    stack = list(children[src])
    while stack:
        u = stack.pop()
        if u in out:
            continue
        out.add(u)
        stack.extend(children[u])
    out.discard(src)
    return out


def brute_admissible_dag_canons(observations, n):
    """Canonical forms of every DAG consistent with the observations, by
    filtering all 2^(n(n-1)) labeled digraphs."""
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    out = set()
    for mask in range(2 ** len(pairs)):
        edges = frozenset(p for k, p in enumerate(pairs) if mask >> k & 1)
        if not _kahn_acyclic(n, edges):
            continue
        ok = True
        for obs in observations:
            reach = _bfs_reach(n, edges, obs.source)
            if tuple(1 if j in reach else 0 for j in range(n)) != obs.effect:
                ok = False
                break
        if ok:
            out.add(canon_dag(Dag(n, edges)))
    return out


def brute_admissible_stack_canons(projection, k):
    """Canonical forms of every valid stack, by filtering all binary tensors
    with hand-rolled gravity and projection loops."""
    from hyposet.voxel import canon_stack

    proj = np.asarray(projection)
    rows, cols = proj.shape
    out = set()
    for bits in itertools.product([0, 1], repeat=k * rows * cols):
        tensor = np.asarray(bits, dtype=np.uint8).reshape(k, rows, cols)
        ok = True
        for i in range(rows):
            for j in range(cols):
                column = [int(tensor[z, i, j]) for z in range(k)]
                if any(column[z] > column[z - 1] for z in range(1, k)):
                    ok = False
                if (1 if any(column) else 0) != int(proj[i, j]):
                    ok = False
        if ok:
            out.add(canon_stack(tensor))
    return out


def naive_bool_trees(ops, depth_bound, allow_constants):
    """Every binary parse tree of depth <= depth_bound (leaves at depth 0)."""
    leaves = [Var("x"), Var("y")]
    if allow_constants:
        leaves += [Const(0), Const(1)]
    if depth_bound == 0:
        return list(leaves)
    sub = naive_bool_trees(ops, depth_bound - 1, allow_constants)
    out = list(sub)
    if "NOT" in ops:
        out.extend(Not(c) for c in sub)
    for name in ("AND", "OR"):
        if name in ops:
            out.extend(Op(name, (a, b)) for a in sub for b in sub)
    return out


def naive_bool_canon_keys(ops, depth_bound, allow_constants):
    """Naive tree generation + canonical dedupe."""
    return {
        expr_key(canon_expr(t))
        for t in naive_bool_trees(ops, depth_bound, allow_constants)
    }


def independent_truth_table(expr):
    """Truth table via a standalone evaluator (no eval_expr)."""

    def ev(node, x, y):
        if isinstance(node, Var):
            return {"x": x, "y": y}[node.name]
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Not):
            return 0 if ev(node.child, x, y) else 1
        values = [ev(c, x, y) for c in node.children]
        if node.name == "AND":
            return 1 if min(values) else 0
        if node.name == "OR":
            return 1 if max(values) else 0
        raise AssertionError(node)

    return tuple(ev(expr, x, y) for x, y in ((0, 0), (0, 1), (1, 0), (1, 1)))
