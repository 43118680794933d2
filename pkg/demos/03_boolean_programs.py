"""Walkthrough: Boolean programs behind input/output observations.

Hypotheses are expression trees over x and y. The canonicalizer collapses
exactly three surface symmetries (child order, duplicate children, nested
identical operators) so that distinctness is a string comparison, while
keeping mechanistically different programs apart even when they compute the
same function.
"""

from hyposet.boolexpr import (
    ALL_PAIRS,
    PhenotypeObservation,
    canon_expr,
    depth,
    enumerate_exprs,
    eval_expr,
    expr_key,
    filter_consistent,
    generate_bool_instance,
    parse_expr,
    serialize_expr,
    truth_table,
)

OPS = frozenset({"NOT", "AND", "OR"})

# --- parsing and evaluation ----------------------------------------------------

expr = parse_expr("x AND NOT y")
print("parsed:", expr_key(expr), "depth:", depth(expr))
print("truth table over (0,0),(0,1),(1,0),(1,1):", truth_table(expr))

# symbol spellings are accepted too
assert expr_key(parse_expr("x ∧ ¬y")) == expr_key(expr)

# --- what the canonicalizer does (and refuses to do) -----------------------------

pairs = [
    ("y AND x", "x AND y"),          # commutativity
    ("x AND x", "x"),                # idempotence
    ("(x AND y) AND x", "x AND y"),  # flattening, then dedupe
]
for left, right in pairs:
    same = expr_key(canon_expr(parse_expr(left))) == expr_key(canon_expr(parse_expr(right)))
    print(f"Canon({left!r}) == Canon({right!r}):", same)

# deliberately weaker than logical equivalence: these compute the same
# function but stay distinct hypotheses
demorgan = ("NOT (x AND y)", "NOT x OR NOT y")
k1, k2 = (expr_key(canon_expr(parse_expr(t))) for t in demorgan)
print("De Morgan pair collapses:", k1 == k2)
print("  ...even though the truth tables agree:",
      truth_table(parse_expr(demorgan[0])) == truth_table(parse_expr(demorgan[1])))

# --- the hypothesis space --------------------------------------------------------

for d in (0, 1, 2, 3):
    space = enumerate_exprs(OPS, d)
    print(f"depth <= {d}: {len(space)} canonical programs")

# filtering by observations: the full AND truth table pins the program down
obs = [PhenotypeObservation(x, y, x & y) for x, y in ALL_PAIRS]
survivors = filter_consistent(enumerate_exprs(OPS, 1), obs)
print("programs of depth <= 1 consistent with the AND table:",
      [expr_key(e) for e in survivors])

# partial observations leave room: drop one pair and more programs survive
survivors = filter_consistent(enumerate_exprs(OPS, 2), obs[:3])
print(f"depth <= 2 programs consistent with 3 of 4 pairs: {len(survivors)}")

# --- instance presets -------------------------------------------------------------

for difficulty in ("basic", "extended", "full"):
    inst = generate_bool_instance(difficulty, seed=0)
    print(
        f"{difficulty}: depth <= {inst.depth_bound}, constants "
        f"{'on' if inst.allow_constants else 'off'}, "
        f"{len(inst.observations)} observations, |admissible| = {len(inst.admissible)}"
    )
    example = inst.admissible[0]
    assert all(
        eval_expr(example, o.x, o.y) == o.pi for o in inst.observations
    )
    print("  e.g.", serialize_expr(example))
