from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_cnf, random_unsat_cnf, unit_clash
from oracles import as_named, brute_force_sat, family_lp_feasible, injective_maps
from pigeonkit.algebra import Polynomial, pigeon_blocks
from pigeonkit.consistency import (
    BudgetError, DistributionFamily, Family, LocalDistribution, OutsideFamilyError,
    Refutation, check_consistency, decide_sa_rank, functional, lp_listing, matching_count,
    matching_family, refute_certificate_against_family, sa_lp, sa_rank_transition,
    simplex_feasibility,
)
from pigeonkit.formulas import Q, V, Z, clause, gen_php, gen_tphp, make_formula, pos, s_system
from pigeonkit.semialgebraic import (
    Certificate, expand_term, simulate_resolution_sar, term, verify_certificate,
)


# ---------------------------------------------------------------- the matching family


def test_single_pigeon_at_three():
    fam = matching_family(3)
    d = fam.dists[frozenset({1})]
    assert len(d.support()) == 2
    assert all(p == Fraction(1, 2) for _, p in d.support())


def test_two_pigeons_at_four():
    d = matching_family(4).dists[frozenset({1, 2})]
    assert len(d.support()) == 6
    assert all(p == Fraction(1, 6) for _, p in d.support())


def test_empty_key_is_a_point_mass():
    d = matching_family(4).dists[frozenset()]
    assert d.vars == () and d.probs == {(): 1}


def test_keys_stop_below_k():
    fam = matching_family(4)
    assert max(len(key) for key in fam.dists) == 3
    assert len(fam.dists) == 1 + 4 + 6 + 4


def test_small_k_is_refused():
    with pytest.raises(ValueError):
        matching_family(2)


@pytest.mark.parametrize("k", [3, 4, 5])
def test_matching_family_is_consistent(k):
    rep = check_consistency(matching_family(k), gen_tphp(k))
    assert rep.ok, rep.violations[:3]
    assert rep.keys_checked == 2 ** k - 1


@pytest.mark.parametrize("k", [3, 4, 5])
def test_support_sizes_match_injection_count(k):
    fam = matching_family(k)
    for key, d in fam.dists.items():
        assert len(d.support()) == matching_count(k, len(key)) == len(injective_maps(sorted(key), range(1, k)))


def test_support_encodes_the_maps():
    # holes 1..3; z[1,1] says pigeon 1 sits above hole 1
    d = matching_family(4).dists[frozenset({1})]
    assert [v.name for v in d.vars] == ["q[1,1]", "q[1,2]", "q[1,3]", "z[1,1]"]
    assert set(d.probs) == {(1, 0, 0, 0), (0, 1, 0, 1), (0, 0, 1, 1)}


def test_bumped_probability_breaks_marginals():
    fam = matching_family(4)
    d = fam.dists[frozenset({1, 2})]
    bits = sorted(d.probs)
    d.probs[bits[0]] += Fraction(1, 100)
    d.probs[bits[1]] -= Fraction(1, 100)
    rep = check_consistency(fam, gen_tphp(4))
    assert any(v[0] == "H2" for v in rep.violations)


def test_single_key_family_has_nothing_to_compare():
    fam = matching_family(4)
    rep = check_consistency(fam, gen_tphp(4), keys=[{1}])
    assert rep.ok and rep.pairs_checked == 0


def test_falsified_clause_in_support_is_reported():
    f = make_formula([clause([pos(V(1)), pos(V(2))])])
    fam = DistributionFamily("vars")
    fam.dists[frozenset()] = LocalDistribution((), {(): Fraction(1)})
    fam.dists[frozenset({V(1)})] = LocalDistribution((V(1),), {(0,): Fraction(1)})
    fam.dists[frozenset({V(2)})] = LocalDistribution((V(2),), {(0,): Fraction(1)})
    fam.dists[frozenset({V(1), V(2)})] = LocalDistribution((V(1), V(2)), {(0, 0): Fraction(1)})
    rep = check_consistency(fam, f)
    assert [v[0] for v in rep.violations] == ["H1"]


def test_mass_and_closure_violations():
    f = make_formula([clause([pos(V(1))])])
    fam = DistributionFamily("vars")
    fam.dists[frozenset({V(1)})] = LocalDistribution((V(1),), {(1,): Fraction(1, 2)})
    kinds = {v[0] for v in check_consistency(fam, f).violations}
    assert kinds == {"mass", "not downward closed"}
    assert check_consistency(fam, f, keys=[{V(2)}]).violations[0][0] == "missing key"


def test_family_text_lists_every_key():
    text = matching_family(3).to_text()
    assert text.startswith("scheme pigeon\n")
    assert text.count("key ") == 7


# ---------------------------------------------------------------- the functional


def test_constant_is_its_own_value():
    assert functional(matching_family(4), Polynomial.const(Fraction(3, 7))) == Fraction(3, 7)
    assert functional(matching_family(4), Polynomial()) == 0


def test_functional_reads_twins_as_complements():
    fam = matching_family(4)
    q = Polynomial.var(Q(1, 1))
    assert functional(fam, q) == Fraction(1, 3)
    assert functional(fam, Polynomial.var(Q(1, 1).twinned())) == Fraction(2, 3)
    assert functional(fam, q * q) == functional(fam, q)
    # two pigeons cannot share a hole
    assert functional(fam, q * Polynomial.var(Q(2, 1))) == 0
    assert functional(fam, Polynomial.var(Z(1, 1)) * Polynomial.var(Z(2, 1))) == Fraction(1, 3)


def test_functional_outside_the_family():
    fam = matching_family(3)
    p = Polynomial.monomial([Q(1, 1), Q(2, 1), Q(3, 1)])
    with pytest.raises(OutsideFamilyError):
        functional(fam, p)


def test_malformed_certificate_is_rejected_first():
    fam = matching_family(4)
    s = s_system(gen_tphp(4))
    c = Certificate("SAR", Polynomial.const(-1), [term(-1)])
    v = refute_certificate_against_family(c, s, fam)
    assert v.status == "certificate rejected"


def test_claimed_low_pigeon_rank_certificate_leaves_positive_residual(tphp4_refutation):
    f, r = tphp4_refutation
    s = s_system(f)
    c = simulate_resolution_sar(r, f)
    kept = [t for t in c.terms if expand_term(t, s.polys).block_degree(pigeon_blocks) <= 3]
    assert len(kept) < len(c.terms)
    claim = Certificate(c.flavor, c.target, kept)
    fam = matching_family(4)
    for t in kept:
        assert functional(fam, expand_term(t, s.polys)) >= 0
    v = refute_certificate_against_family(claim, s, fam)
    assert v.status == "certificate rejected"
    assert v.values and v.residual_value >= 1


def test_full_certificate_reaches_outside_the_family(tphp4_refutation):
    f, r = tphp4_refutation
    with pytest.raises(OutsideFamilyError):
        refute_certificate_against_family(simulate_resolution_sar(r, f), s_system(f), matching_family(4))


def test_valid_certificate_exposes_an_inconsistent_family():
    f, r = unit_clash()
    s = s_system(f)
    c = simulate_resolution_sar(r, f)
    fam = DistributionFamily("vars")
    fam.dists[frozenset()] = LocalDistribution((), {(): Fraction(1)})
    fam.dists[frozenset({V(1)})] = LocalDistribution((V(1),), {(1,): Fraction(1)})
    v = refute_certificate_against_family(c, s, fam)
    assert v.status == "family inconsistent"
    assert not check_consistency(fam, f).ok


# ---------------------------------------------------------------- exact simplex


def test_simplex_feasible():
    # x0 + x1 = 2, x1 - x2 = 1
    st_, x = simplex_feasibility([{0: 1, 1: 1}, {1: 1, 2: -1}], [2, 1], 3)
    assert st_ == "feasible"
    assert x[0] + x[1] == 2 and x[1] - x[2] == 1 and min(x) >= 0


def test_simplex_infeasible_with_farkas_vector():
    rows, rhs = [{0: 1, 1: 1}, {0: 1, 1: 1}], [1, 2]
    st_, y = simplex_feasibility(rows, rhs, 2)
    assert st_ == "infeasible"
    for j in range(2):
        assert sum(yi * r.get(j, 0) for yi, r in zip(y, rows)) <= 0
    assert sum(yi * b for yi, b in zip(y, rhs)) > 0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(-3, 3), min_size=4, max_size=4), min_size=1, max_size=4),
       st.lists(st.integers(-4, 4), min_size=4, max_size=4))
def test_simplex_agrees_with_highs(mat, rhs):
    from scipy.optimize import linprog
    rhs = rhs[:len(mat)]
    rows = [{j: a for j, a in enumerate(r) if a} for r in mat]
    st_, sol = simplex_feasibility(rows, rhs, 4)
    ref = linprog([0] * 4, A_eq=mat, b_eq=rhs, bounds=[(0, None)] * 4, method="highs")
    assert (st_ == "feasible") == (ref.status == 0)
    if st_ == "feasible":
        assert all(sum(r.get(j, 0) * sol[j] for j in r) == b for r, b in zip(rows, rhs))
    else:
        assert all(sum(yi * r.get(j, 0) for yi, r in zip(sol, rows)) <= 0 for j in range(4))
        assert sum(yi * b for yi, b in zip(sol, rhs)) > 0


# ---------------------------------------------------------------- deciding rank


def test_unit_clash_at_rank_one():
    f, _ = unit_clash()
    res = decide_sa_rank(f, 1)
    assert isinstance(res, Refutation)
    m = verify_certificate(res.certificate, res.system)
    assert m.refutation and m.rank <= 1


def test_satisfiable_clause_gets_a_family():
    f = make_formula([clause([pos(V(1)), pos(V(2))])])
    res = decide_sa_rank(f, 2)
    assert isinstance(res, Family)
    assert check_consistency(res.family, f).ok


def test_rank_must_be_positive():
    with pytest.raises(ValueError):
        decide_sa_rank(unit_clash()[0], 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_satisfiable_formulas_always_get_families(seed, k):
    f = random_cnf(seed, nvars=3, nclauses=4)
    if brute_force_sat(f.clauses) is None:
        return
    res = decide_sa_rank(f, k)
    assert isinstance(res, Family)
    assert check_consistency(res.family, f).ok


def test_php3_transition():
    f = gen_php(3)
    want = {1: True, 2: True, 3: False}
    for k, feasible in want.items():
        assert family_lp_feasible(as_named(f), k) == feasible
    assert sa_rank_transition(f) == {1: "family", 2: "family", 3: "refutation"}
    res = decide_sa_rank(f, 3)
    m = verify_certificate(res.certificate, res.system)
    assert m.refutation and m.rank <= 3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_decision_matches_independent_lp(seed):
    f = random_unsat_cnf(seed, nvars=4)
    prev_refuted = False
    for k in range(1, 5):
        res = decide_sa_rank(f, k)
        refuted = isinstance(res, Refutation)
        assert refuted == (not family_lp_feasible(as_named(f), k))
        assert refuted or not prev_refuted
        if refuted:
            m = verify_certificate(res.certificate, res.system)
            assert m.refutation and m.rank <= k
        else:
            assert check_consistency(res.family, f).ok
        prev_refuted = refuted
    # with every variable in reach the LP sees the whole truth table
    assert prev_refuted


def test_lp_shape():
    f = make_formula([clause([pos(V(1)), pos(V(2))]), clause([pos(V(3))])])
    cols, rows = sa_lp(f, 2)
    assert len(cols) == 3 + 3
    assert len(rows) == 3 * 4
    # only the pair {1,2} covers the first clause, and only the all-false pattern falsifies it
    eqs = [(X, Y) for kind, X, Y, _ in rows if kind == "eq" and set(X) == {V(1), V(2)}]
    assert eqs == [((V(1), V(2)), frozenset())]


def test_lp_listing():
    f = make_formula([clause([pos(V(1))])])
    text = lp_listing(f, 1)
    # x false is ruled out: 1 - a(x) = 0; x true is allowed: a(x) >= 0
    assert text.splitlines() == ["# variables: 1, constraints: 2", "- 1 a(v[1]) = -1", "+ 1 a(v[1]) >= 0"]


def test_budget():
    with pytest.raises(BudgetError):
        decide_sa_rank(gen_php(4), 4, budget=1000)
