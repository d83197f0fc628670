from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from oracles import eval_poly, random_point
from pigeonkit.algebra import (
    Polynomial, moebius, parse_poly, pigeon_blocks, restrict_poly, single_block,
)
from pigeonkit.formulas import Q, V, X, Z

x, y = Polynomial.var(V(1)), Polynomial.var(V(2))
VARS = [V(i) for i in range(1, 5)] + [V(i).twinned() for i in range(1, 3)] + [Q(1, 1), Z(2, 1)]


@st.composite
def polys(draw, max_terms=4):
    p = Polynomial()
    for _ in range(draw(st.integers(0, max_terms))):
        vs = draw(st.lists(st.sampled_from(VARS), max_size=3))
        c = Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 4)))
        p = p + Polynomial.monomial(vs, c)
    return p


def test_examples():
    assert x * (1 - x) == x - x ** 2
    assert (x ** 2 * y).multilinearize() == x * y
    q11 = Polynomial.var(Q(1, 1))
    assert (-q11).substitute({Q(1, 1): 1 - Polynomial.var(X(1, 1))}) == Polynomial.var(X(1, 1)) - 1


def test_zero_coefficients_are_dropped():
    p = x + y - x
    assert p == y and len(p) == 1
    assert not (x - x)


def test_restriction_conventions():
    p = x * y
    assert restrict_poly(p, {V(1): True}, "ineq") == y
    assert restrict_poly(p, {V(1): True}, "pcr") == Polynomial()
    twin = x + Polynomial.var(V(1).twinned())
    assert restrict_poly(twin, {V(1): False}, "ineq") == Polynomial.const(1)


def test_block_degree():
    q11, q21, z12 = (Polynomial.var(v) for v in (Q(1, 1), Q(2, 1), Z(1, 2)))
    assert (q11 * q21).block_degree(pigeon_blocks) == 2
    assert (q11 * z12).block_degree(pigeon_blocks) == 1
    sq = q11 ** 2
    assert sq.degree() == 2 and sq.block_degree(pigeon_blocks) == 1
    assert Polynomial.var(Q(1, 1).twinned()).block_degree(pigeon_blocks) == 1
    assert (x * y).block_degree(single_block) == 1


def test_block_degree_strict_rejects_unblocked():
    with pytest.raises(ValueError):
        (x * Polynomial.var(Q(1, 1))).block_degree(pigeon_blocks, strict=True)


def test_moebius_examples():
    a = {frozenset(): Fraction(1), frozenset([V(1)]): Fraction(1, 2)}
    assert moebius(a, [V(1)], []) == Fraction(1, 2)
    assert moebius(a, [V(1)], [V(1)]) == Fraction(1, 2)
    with pytest.raises(KeyError):
        moebius({frozenset(): 1}, [V(1)], [])


@given(st.lists(st.integers(0, 12), min_size=8, max_size=8))
def test_moebius_sums_to_empty_value(vals):
    X_ = [V(1), V(2), V(3)]
    a = {}
    for r in range(4):
        for i, Z_ in enumerate(combinations(X_, r)):
            a[frozenset(Z_)] = Fraction(vals[(r * 3 + i) % 8], 7)
    a[frozenset()] = Fraction(1)
    total = sum(moebius(a, X_, Y) for r in range(4) for Y in combinations(X_, r))
    assert total == 1


def test_moebius_of_product_distribution_gives_probabilities():
    # a(Z) = Pr[all of Z true] for independent bits; moebius recovers Pr[pattern]
    pr = {V(1): Fraction(1, 3), V(2): Fraction(3, 4)}
    a = {}
    for r in range(3):
        for Z_ in combinations(pr, r):
            val = Fraction(1)
            for v in Z_:
                val *= pr[v]
            a[frozenset(Z_)] = val
    for Y in ([], [V(1)], [V(2)], [V(1), V(2)]):
        want = Fraction(1)
        for v in pr:
            want *= pr[v] if v in Y else 1 - pr[v]
        assert moebius(a, list(pr), Y) == want


# ---------------------------------------------------------------- ring laws


@given(polys(), polys(), polys())
def test_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a - a == Polynomial()


@given(polys(), polys(), st.integers(0, 1000))
def test_arithmetic_matches_pointwise_evaluation(a, b, seed):
    pt = random_point(VARS, seed)
    assert eval_poly(a * b, pt) == eval_poly(a, pt) * eval_poly(b, pt)
    assert eval_poly(a - b, pt) == eval_poly(a, pt) - eval_poly(b, pt)
    assert a.evaluate(pt) == eval_poly(a, pt)


@given(polys(), polys())
def test_degree_of_product(a, b):
    if a and b:
        assert (a * b).degree() == a.degree() + b.degree()


@given(polys())
def test_multilinearize_agrees_on_boolean_points(p):
    ml = p.multilinearize()
    assert all(e == 1 for m in ml.terms for _, e in m)
    for bits in range(1 << len(VARS)):
        pt = {v: (bits >> i) & 1 for i, v in enumerate(VARS)}
        assert eval_poly(ml, pt) == eval_poly(p, pt)
        if bits > 40:
            break


@given(polys())
def test_text_round_trip(p):
    assert parse_poly(str(p)) == p


@given(polys(), st.dictionaries(st.sampled_from([V(1), V(2), V(3)]), st.booleans()))
def test_restriction_is_evaluation_of_assigned_part(p, rho):
    r = restrict_poly(p, rho, "ineq")
    pt = random_point(VARS, 5)
    for v, b in rho.items():
        pt[v] = int(b)
        pt[v.twinned()] = 1 - int(b)
    assert eval_poly(r, pt) == eval_poly(p, pt)


@given(polys(), st.sampled_from([2, 3, 7, 101]))
def test_modular_reduction(p, m):
    if any(Fraction(c).denominator % m == 0 for c in p.terms.values()):
        with pytest.raises(ValueError):
            p.mod(m)
        return
    pm = p.mod(m)
    pt = {v: 3 for v in VARS}
    val = Fraction(eval_poly(p, pt))
    want = val.numerator * pow(val.denominator, -1, m) % m
    assert eval_poly(pm, pt) % m == want


def test_substitute_twins_for_complements():
    p = Polynomial.var(V(1).twinned()) * y
    q = p.substitute({V(1).twinned(): 1 - x})
    assert q == y - x * y
