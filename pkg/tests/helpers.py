"""Builders shared by several test modules."""
import random

from pigeonkit.formulas import V, clause, make_formula, neg, pos
from pigeonkit.resolution import ProofBuilder

from oracles import brute_force_sat

# criterion number -> (passed, detail); filled in by test_acceptance
ACCEPTANCE = {}


def unit_clash():
    f = make_formula([clause([pos(V(1))]), clause([neg(V(1))])])
    b = ProofBuilder(f)
    i = b.axiom(f.clauses[0])
    j = b.axiom(f.clauses[1])
    b.resolve(i, j, V(1))
    return f, b.proof()


def random_cnf(seed, nvars=5, nclauses=14, width=3):
    rng = random.Random(seed)
    seen = set()
    while len(seen) < nclauses:
        vs = rng.sample(range(1, nvars + 1), rng.randint(1, width))
        seen.add(clause([pos(V(i)) if rng.random() < 0.5 else neg(V(i)) for i in vs]))
    return make_formula(sorted(seen, key=lambda c: sorted(c)))


def random_unsat_cnf(seed, nvars=5, width=3):
    """Add random clauses until the formula is unsatisfiable."""
    rng = random.Random(seed)
    seen = []
    while True:
        vs = rng.sample(range(1, nvars + 1), rng.randint(1, width))
        c = clause([pos(V(i)) if rng.random() < 0.5 else neg(V(i)) for i in vs])
        if c in seen:
            continue
        seen.append(c)
        if brute_force_sat(seen, [V(i) for i in range(1, nvars + 1)]) is None:
            return make_formula(seen)
