"""Consistent families of local distributions and the exact LP deciding
Sherali-Adams rank.

A family maps keys (pigeon sets or variable sets) to distributions over
assignments of the variables the key covers.  A consistent family is a
witness that no low-rank certificate exists; the LP either finds one or
produces a certificate from the Farkas multipliers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations, product
from math import comb
from typing import Callable

from .algebra import Polynomial, _norm, moebius, pigeon_blocks
from .formulas import CnfFormula, clause_vars, gen_tphp
from .semialgebraic import (
    Certificate, CertificateError, expand_term, sim_axiom, term, verify_certificate,
)


class BudgetError(RuntimeError):
    pass


# ---------------------------------------------------------------- families


@dataclass
class LocalDistribution:
    vars: tuple
    probs: dict  # tuple of 0/1 values aligned with vars -> Fraction

    def support(self):
        return [(bits, p) for bits, p in self.probs.items() if p != 0]

    def marginal(self, sub) -> "LocalDistribution":
        sub = tuple(sub)
        pos = [self.vars.index(v) for v in sub]
        out = {}
        for bits, p in self.probs.items():
            key = tuple(bits[i] for i in pos)
            out[key] = out.get(key, 0) + p
        return LocalDistribution(sub, {b: p for b, p in out.items() if p != 0})

    def prob_all_true(self, lits) -> Fraction:
        """Probability that every (var, value) pair holds."""
        pos = [(self.vars.index(v), val) for v, val in lits]
        return sum((p for bits, p in self.probs.items() if all(bits[i] == val for i, val in pos)),
                   Fraction(0))


@dataclass
class DistributionFamily:
    scheme: str                      # "pigeon" or "vars"
    dists: dict = field(default_factory=dict)   # frozenset key -> LocalDistribution
    blocks: Callable = pigeon_blocks

    def key_of(self, variables) -> frozenset:
        if self.scheme == "pigeon":
            return frozenset(self.blocks(v.base) for v in variables) - {None}
        return frozenset(v.base for v in variables)

    def to_text(self) -> str:
        lines = [f"scheme {self.scheme}"]
        for key in sorted(self.dists, key=lambda s: (len(s), sorted(map(str, s)))):
            d = self.dists[key]
            lines.append("key {" + " ".join(str(getattr(x, "name", x)) for x in sorted(key)) + "}")
            lines.append("vars " + " ".join(v.name for v in d.vars))
            for bits, p in sorted(d.probs.items()):
                lines.append(f"assign {''.join(map(str, bits)) or '-'} prob {Fraction(p)}")
        return "\n".join(lines) + "\n"


def _pigeon_vars(f: CnfFormula, pigeons, blocks=pigeon_blocks) -> tuple:
    return tuple(v for v in f.variables() if blocks(v) in pigeons)


def matching_family(k: int) -> DistributionFamily:
    """For each set A of at most k-1 pigeons: uniform over one-to-one maps
    A -> holes, with q[v,w] = (v goes to w) and z[v,w] = (v goes above w)."""
    if k < 3:
        raise ValueError("matching_family needs k >= 3")
    f = gen_tphp(k)
    fam = DistributionFamily("pigeon")
    holes = range(1, k)
    for size in range(0, k):
        for A in combinations(range(1, k + 1), size):
            vs = _pigeon_vars(f, set(A))
            maps = list(permutations(holes, size))
            p = Fraction(1, len(maps))
            probs = {}
            for phi in maps:
                where = dict(zip(A, phi))
                bits = tuple(int(where[v.idx[0]] == v.idx[1]) if v.kind == "q"
                             else int(where[v.idx[0]] > v.idx[1]) for v in vs)
                probs[bits] = probs.get(bits, 0) + p
            fam.dists[frozenset(A)] = LocalDistribution(vs, probs)
    return fam


def matching_count(k: int, size: int) -> int:
    """Number of one-to-one maps from a pigeon set of this size into k-1 holes."""
    return comb(k - 1, size) * _fact(size)


def _fact(n):
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


# ---------------------------------------------------------------- checks


@dataclass
class ConsistencyReport:
    keys_checked: int = 0
    pairs_checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _falsifies(c, vars_, bits) -> bool:
    val = dict(zip(vars_, bits))
    return all(val[l.var] != l.positive for l in c)


def check_consistency(fam: DistributionFamily, f: CnfFormula, keys=None) -> ConsistencyReport:
    """Support of each key satisfies the clauses it covers; comparable keys
    have matching marginals; the key family is closed downward."""
    rep = ConsistencyReport()
    keys = list(fam.dists) if keys is None else [frozenset(k) for k in keys]
    for key in keys:
        if key not in fam.dists:
            rep.violations.append(("missing key", key))
            continue
        d = fam.dists[key]
        rep.keys_checked += 1
        total = sum(d.probs.values(), Fraction(0))
        if total != 1:
            rep.violations.append(("mass", key, total))
        if any(p < 0 for p in d.probs.values()):
            rep.violations.append(("negative", key))
        covered = set(d.vars)
        for c in f.clauses:
            if not {l.var for l in c} <= covered:
                continue
            if fam.key_of(clause_vars(c)) - key:
                continue
            for bits, p in d.support():
                if _falsifies(c, d.vars, bits):
                    rep.violations.append(("H1", key, c, bits))
                    break
        for x in key:
            if key - {x} not in fam.dists:
                rep.violations.append(("not downward closed", key))
                break
    for a, b in combinations(keys, 2):
        if a > b:
            a, b = b, a
        if not a < b or a not in fam.dists or b not in fam.dists:
            continue
        rep.pairs_checked += 1
        da, db = fam.dists[a], fam.dists[b]
        if not set(da.vars) <= set(db.vars):
            rep.violations.append(("H2 variables", a, b))
            continue
        m = db.marginal(da.vars)
        want = {bits: p for bits, p in da.probs.items() if p != 0}
        if m.probs != want:
            rep.violations.append(("H2", a, b))
    return rep


# ---------------------------------------------------------------- the functional


@dataclass
class Verdict:
    status: str            # "certificate rejected" | "family inconsistent" | "contradiction"
    detail: str
    term_index: int | None = None
    values: list = field(default_factory=list)
    residual_value: object = None


class OutsideFamilyError(ValueError):
    pass


def functional(fam: DistributionFamily, p: Polynomial):
    """Expectation of p under the local distribution of the key p mentions,
    with every power read as the variable itself and twins as complements."""
    if not p.terms:
        return Fraction(0)
    key = fam.key_of(p.variables())
    if key not in fam.dists:
        raise OutsideFamilyError(f"no distribution for key {sorted(key, key=str)}")
    d = fam.dists[key]
    total = Fraction(0)
    for m, c in p.terms.items():
        lits = [(v.base, 0 if v.twin else 1) for v, _ in m]
        total += c * d.prob_all_true(lits)
    return _norm(total)


def refute_certificate_against_family(c: Certificate, system, fam: DistributionFamily,
                                      blocks: Callable = pigeon_blocks) -> Verdict:
    """Replay the argument that a consistent family rules out the certificate.

    Each term must have a nonnegative value under the functional while the
    values add up to the value of the target, -1.  Whichever side gives way
    is reported.
    """
    polys = system.polys if hasattr(system, "polys") else tuple(system)
    try:
        verify_certificate(c, polys, blocks)
    except CertificateError as e:
        residual = e.residual
        located = []
        if residual is not None:
            for m, coef in residual.sorted_terms():
                try:
                    val = functional(fam, Polynomial._raw({m: coef}))
                except OutsideFamilyError:
                    continue
                if val != 0:
                    located.append((m, val))
        # for a claimed certificate inside the family's reach the residual
        # must carry positive value: the term values are >= 0, the target's is -1
        rv = sum((val for _, val in located), Fraction(0)) if residual is not None else None
        return Verdict("certificate rejected", str(e).splitlines()[0], e.term_index, located, rv)
    values = []
    for i, t in enumerate(c.terms):
        e = expand_term(t, polys)
        try:
            val = functional(fam, e)
        except OutsideFamilyError as err:
            raise OutsideFamilyError(f"term {i}: {err}") from None
        values.append(val)
        if val < 0:
            return Verdict("family inconsistent", f"term {i} has value {val} < 0", i, values)
    total = sum(values, Fraction(0))
    want = functional(fam, c.target) if c.target.variables() else c.target.constant()
    if total != want:
        return Verdict("family inconsistent",
                       f"term values add to {total}, target has value {want}", None, values)
    return Verdict("contradiction", "values are nonnegative and add up to the target", None, values)


# ---------------------------------------------------------------- exact simplex


def simplex_feasibility(rows: list, rhs: list, ncols: int, max_pivots: int = 200_000):
    """Decide {x >= 0 : A x = b} exactly.

    rows are sparse dicts col -> coefficient.  Returns ("feasible", x) or
    ("infeasible", y) with y^T A <= 0 and y^T b > 0.  Phase one with Bland's
    rule; since only feasibility is asked, the second phase has nothing to do.
    """
    m = len(rows)
    sign = [(-1 if b < 0 else 1) for b in rhs]
    A = [{j: Fraction(a) * s for j, a in r.items() if a} for r, s in zip(rows, sign)]
    b = [Fraction(v) * s for v, s in zip(rhs, sign)]
    # columns already forming a unit vector can start in the basis
    col_rows = {}
    for i, r in enumerate(A):
        for j in r:
            col_rows.setdefault(j, []).append(i)
    basis = [None] * m
    for j, rs in sorted(col_rows.items()):
        if len(rs) == 1 and A[rs[0]][j] == 1 and basis[rs[0]] is None:
            basis[rs[0]] = j
    start = list(basis)
    art = {}
    width = ncols
    for i in range(m):
        if basis[i] is None:
            art[i] = width
            basis[i] = width
            width += 1
    T = []
    for i, r in enumerate(A):
        row = [Fraction(0)] * (width + 1)
        for j, a in r.items():
            row[j] = a
        if i in art:
            row[art[i]] = Fraction(1)
        row[width] = b[i]
        T.append(row)
    cost = [Fraction(0)] * (width + 1)
    for i, j in art.items():
        cost[j] = Fraction(1)
    z = list(cost)
    for i in art:
        z = [zc - tc for zc, tc in zip(z, T[i])]
    pivots = 0
    while True:
        enter = next((j for j in range(width) if z[j] < 0), None)
        if enter is None:
            break
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][width] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:  # cannot happen in phase one: objective is bounded below
            raise RuntimeError("unbounded phase one")
        p = best[1]
        piv = T[p][enter]
        T[p] = [v / piv for v in T[p]]
        prow = T[p]
        nz = [j for j, v in enumerate(prow) if v]
        for i in range(m):
            if i != p:
                f = T[i][enter]
                if f:
                    Ti = T[i]
                    for j in nz:
                        Ti[j] -= f * prow[j]
        f = z[enter]
        for j in nz:
            z[j] -= f * prow[j]
        basis[p] = enter
        pivots += 1
        if pivots > max_pivots:
            raise BudgetError("pivot budget exceeded")
    if -z[width] > 0:
        # duals from the reduced costs of the starting identity columns
        y = []
        for i in range(m):
            j = art.get(i, start[i])
            y.append((cost[j] - z[j]) * sign[i])
        return "infeasible", y
    x = [Fraction(0)] * ncols
    for i, j in enumerate(basis):
        if j < ncols:
            x[j] = T[i][width]
    return "feasible", x


# ---------------------------------------------------------------- SA rank


@dataclass
class Refutation:
    certificate: Certificate
    system: tuple


@dataclass
class Family:
    family: DistributionFamily


def _pattern(X: tuple, Y: frozenset):
    return [v for v in X if v in Y], [v for v in X if v not in Y]


def sa_lp(f: CnfFormula, k: int, budget: int = 4_000_000):
    """Rows of the feasibility system over a(Z), |Z| <= k, one column per
    nonempty Z.  Returns (columns, rows) where each row is
    (kind, X, Y, clause_index) and kind is "ge" or "eq"."""
    vs = f.variables()
    top = min(k, len(vs))
    cols = [frozenset(s) for r in range(1, top + 1) for s in combinations(vs, r)]
    nrows = comb(len(vs), top) * 2 ** top
    if nrows * (len(cols) + nrows) > budget:
        raise BudgetError(f"LP with {nrows} rows and {len(cols)} columns exceeds the budget")
    clause_sets = [(i, c, frozenset(clause_vars(c))) for i, c in enumerate(f.clauses)]
    rows = []
    for X in combinations(vs, top):
        Xs = set(X)
        for r in range(top + 1):
            for Y in combinations(X, r):
                Y = frozenset(Y)
                hit = None
                for i, c, cv in clause_sets:
                    if cv <= Xs and all((l.var in Y) != l.positive for l in c):
                        hit = i
                        break
                rows.append(("eq" if hit is not None else "ge", X, Y, hit))
    return cols, rows


def _row_coeffs(X, Y, colidx):
    """Coefficients of the multilinear expansion of prod_Y x prod_{X-Y} (1-x)."""
    rest = [v for v in X if v not in Y]
    coeffs, const = {}, 0
    for r in range(len(rest) + 1):
        for extra in combinations(rest, r):
            Zs = Y | frozenset(extra)
            s = (-1) ** r
            if Zs:
                coeffs[colidx[Zs]] = coeffs.get(colidx[Zs], 0) + s
            else:
                const += s
    return coeffs, const


def lp_listing(f: CnfFormula, k: int) -> str:
    cols, rows = sa_lp(f, k)
    colidx = {c: i for i, c in enumerate(cols)}
    names = ["a(" + ",".join(v.name for v in sorted(c)) + ")" for c in cols]
    out = [f"# variables: {len(cols)}, constraints: {len(rows)}"]
    for kind, X, Y, _ in rows:
        coeffs, const = _row_coeffs(X, Y, colidx)
        lhs = " ".join(f"{'+' if a > 0 else '-'} {abs(a)} {names[j]}" for j, a in sorted(coeffs.items()))
        out.append(f"{lhs} {'>=' if kind == 'ge' else '='} {-const}")
    return "\n".join(out) + "\n"


def decide_sa_rank(f: CnfFormula, k: int, budget: int = 4_000_000):
    """Refutation(certificate) when no k-consistent family exists, else Family."""
    if k < 1:
        raise ValueError("rank must be at least 1")
    cols, rows = sa_lp(f, k, budget)
    colidx = {c: i for i, c in enumerate(cols)}
    ncols = len(cols)
    A, b = [], []
    slack = ncols
    for kind, X, Y, _ in rows:
        coeffs, const = _row_coeffs(X, Y, colidx)
        if kind == "ge":
            coeffs[slack] = -1
            slack += 1
        A.append(coeffs)
        b.append(-const)
    status, sol = simplex_feasibility(A, b, slack)
    system = tuple(_s_polys(f))
    if status == "infeasible":
        cert = _farkas_certificate(f, cols, rows, sol, A, b, ncols)
        m = verify_certificate(cert, system)
        if m.rank > k:
            raise AssertionError(f"extracted certificate has rank {m.rank} > {k}")
        return Refutation(cert, system)
    a = {frozenset(): Fraction(1)}
    a.update({c: sol[i] for i, c in enumerate(cols)})
    fam = _family_from_functional(f, a, k)
    rep = check_consistency(fam, f)
    if not rep.ok:
        raise AssertionError(f"LP solution gives an inconsistent family: {rep.violations[:3]}")
    return Family(fam)


def _s_polys(f):
    from .formulas import encode_clause
    return [encode_clause(c, "S") for c in f.clauses]


def _farkas_certificate(f, cols, rows, y, A, b, ncols) -> Certificate:
    yb = sum((yi * bi for yi, bi in zip(y, b)), Fraction(0))
    assert yb > 0, "Farkas multipliers must certify infeasibility"
    terms = []
    # combined coefficients sum_r y_r G_r on the a-columns: all <= 0
    d = [Fraction(0)] * ncols
    for yi, row in zip(y, A):
        if yi:
            for j, a in row.items():
                if j < ncols:
                    d[j] += yi * a
    for (kind, X, Y, ci), yi in zip(rows, y):
        if yi == 0:
            continue
        mul, inv = _pattern(X, Y)
        if yi > 0:
            terms.append(term(yi / yb, mul, inv))
        else:
            # -|y| times the falsified pattern, derived from the clause it falsifies
            c = f.clauses[ci]
            frag = sim_axiom(c, ci, "SA")
            cv = clause_vars(c)
            extra_mul = [v for v in mul if v not in cv]
            extra_inv = [v for v in inv if v not in cv]
            for t in frag.terms:
                terms.append(term(t.alpha * (-yi) / yb, list(t.mul) + extra_mul,
                                  list(t.inv) + extra_inv, t.base))
    for j, dj in enumerate(d):
        if dj > 0:
            raise AssertionError("Farkas multipliers violate the sign condition")
        if dj < 0:
            terms.append(term(-dj / yb, sorted(cols[j])))
    return Certificate("SA", Polynomial.const(-1), terms)


def _family_from_functional(f, a: dict, k: int) -> DistributionFamily:
    fam = DistributionFamily("vars")
    vs = f.variables()
    for r in range(0, min(k, len(vs)) + 1):
        for X in combinations(vs, r):
            probs = {}
            for bits in product((0, 1), repeat=r):
                Y = frozenset(v for v, bit in zip(X, bits) if bit)
                p = moebius(a, X, Y)
                if p:
                    probs[bits] = Fraction(p)
            fam.dists[frozenset(X)] = LocalDistribution(tuple(X), probs)
    return fam


def sa_rank_transition(f: CnfFormula, max_k: int | None = None, budget: int = 4_000_000) -> dict:
    """Outcome of decide_sa_rank for k = 1, 2, ... until the first refutation."""
    out = {}
    top = max_k or len(f.variables())
    for k in range(1, top + 1):
        res = decide_sa_rank(f, k, budget)
        out[k] = "refutation" if isinstance(res, Refutation) else "family"
        if isinstance(res, Refutation):
            break
    return out
