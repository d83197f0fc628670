"""Static semialgebraic certificates: Sherali-Adams (SA), its twin-variable
extension (SAR) and Lasserre.

A certificate is a list of terms ``alpha * prod(mul) * prod(1 - x for x in
inv) * base`` with alpha >= 0; it is valid when the terms expand to the
target polynomial, which is -1 for a refutation.  Clauses enter through the
additive encoding ``sum(pos) + sum(1 - neg) - 1 >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple

from .algebra import (
    Polynomial, _norm, mono_from_vars, parse_poly, pigeon_blocks, restrict_poly,
    value_of,
)
from .formulas import (
    CnfFormula, Literal, P, PolynomialSystem, Q, R, VarId, X, as_assignment,
    gen_php, gen_rphp, narrow_split, neg, parse_var, pos,
    sorted_lits,
)
from .resolution import Axiom, ResolutionProof, Weaken, derive_clauses, premises

FLAVORS = ("SA", "SAR", "LAS")

# terms(simulate_resolution_sar(proof)) <= SAR_SIZE_CONSTANT * width^2 * len(proof):
# an axiom costs at most 2w terms, a weakening w, a resolution 2w + 1.
SAR_SIZE_CONSTANT = 3


# ---------------------------------------------------------------- bases


class Initial(NamedTuple):
    index: int


class BoolUp(NamedTuple):      # x^2 - x
    var: VarId


class BoolDown(NamedTuple):    # x - x^2
    var: VarId


class One(NamedTuple):
    pass


class CompUp(NamedTuple):      # 1 - x - x'
    var: VarId


class CompDown(NamedTuple):    # x + x' - 1
    var: VarId


class Square(NamedTuple):
    poly: Polynomial


class Term(NamedTuple):
    alpha: object
    mul: tuple
    inv: tuple
    base: tuple


def term(alpha, mul=(), inv=(), base=One()) -> Term:
    return Term(_norm(Fraction(alpha)) if isinstance(alpha, Fraction) else alpha,
                tuple(sorted(mul)), tuple(sorted(inv)), base)


@dataclass
class Certificate:
    flavor: str
    target: Polynomial
    terms: list = field(default_factory=list)

    def __add__(self, other: "Certificate") -> "Certificate":
        return Certificate(self.flavor, self.target + other.target, self.terms + other.terms)

    def scaled(self, c) -> "Certificate":
        return Certificate(self.flavor, self.target.scale(c),
                           [t._replace(alpha=_norm(t.alpha * c)) for t in self.terms])

    def to_text(self) -> str:
        lines = [f"flavor {self.flavor}", f"target {self.target}"]
        for t in self.terms:
            lines.append(f"term {Fraction(t.alpha)} mul [{' '.join(v.name for v in t.mul)}] "
                         f"inv [{' '.join(v.name for v in t.inv)}] base {_base_text(t.base)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Certificate":
        flavor, target, terms = None, Polynomial.const(-1), []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, _, rest = line.partition(" ")
            if head == "flavor":
                flavor = rest.strip()
                flavor = {"Lasserre": "LAS"}.get(flavor, flavor)
                if flavor not in FLAVORS:
                    raise ValueError(f"unknown flavor {flavor!r}")
            elif head == "target":
                target = parse_poly(rest)
            elif head == "term":
                terms.append(_parse_term(rest))
            else:
                raise ValueError(f"unexpected line {line!r}")
        if flavor is None:
            raise ValueError("missing flavor line")
        return cls(flavor, target, terms)


def _base_text(b) -> str:
    if isinstance(b, Initial):
        return f"initial {b.index}"
    if isinstance(b, One):
        return "one"
    if isinstance(b, Square):
        return f"square {{ {b.poly} }}"
    tag = {BoolUp: "bool+", BoolDown: "bool-", CompUp: "comp+", CompDown: "comp-"}[type(b)]
    return f"{tag} {b.var.name}"


def _parse_term(text: str) -> Term:
    alpha, rest = text.split(None, 1)

    def bracket(s, key):
        s = s.strip()
        if not s.startswith(key):
            raise ValueError(f"expected {key!r} in {text!r}")
        s = s[len(key):].strip()
        if not s.startswith("["):
            raise ValueError(f"expected '[' after {key!r} in {text!r}")
        depth = 0
        for end, ch in enumerate(s):
            depth += (ch == "[") - (ch == "]")
            if depth == 0:
                break
        else:
            raise ValueError(f"unbalanced brackets in {text!r}")
        return [parse_var(t) for t in s[1:end].split()], s[end + 1:]

    mul, rest = bracket(rest, "mul")
    inv, rest = bracket(rest, "inv")
    rest = rest.strip()
    if not rest.startswith("base"):
        raise ValueError(f"missing base in {text!r}")
    kind, _, arg = rest[4:].strip().partition(" ")
    arg = arg.strip()
    if kind == "initial":
        base = Initial(int(arg))
    elif kind == "one":
        base = One()
    elif kind == "square":
        base = Square(parse_poly(arg.strip("{} ")))
    else:
        base = {"bool+": BoolUp, "bool-": BoolDown, "comp+": CompUp, "comp-": CompDown}[kind](parse_var(arg))
    a = Fraction(alpha)
    return term(a.numerator if a.denominator == 1 else a, mul, inv, base)


# ---------------------------------------------------------------- verification


class CertificateError(ValueError):
    def __init__(self, msg: str, residual: Polynomial | None = None, term_index: int | None = None):
        if residual is not None:
            msg += f"\n  residual (sum - target): {residual}"
        super().__init__(msg)
        self.residual = residual
        self.term_index = term_index


@dataclass(frozen=True)
class CertMetrics:
    rank: int
    size: int
    pigeon_rank: int
    refutation: bool


def base_poly(b, system) -> Polynomial:
    if isinstance(b, Initial):
        if not 0 <= b.index < len(system):
            raise CertificateError(f"initial index {b.index} out of range")
        return system[b.index]
    if isinstance(b, One):
        return Polynomial.const(1)
    if isinstance(b, Square):
        return b.poly * b.poly
    x = Polynomial.var(b.var)
    if isinstance(b, BoolUp):
        return x * x - x
    if isinstance(b, BoolDown):
        return x - x * x
    if b.var.twin:
        raise CertificateError(f"complementarity axiom must name a base variable, got {b.var}")
    xt = Polynomial.var(b.var.twinned())
    if isinstance(b, CompUp):
        return Polynomial.const(1) - x - xt
    if isinstance(b, CompDown):
        return x + xt - Polynomial.const(1)
    raise CertificateError(f"unknown base {b!r}")


def expand_term(t: Term, system) -> Polynomial:
    p = base_poly(t.base, system)
    if t.mul:
        p = p.mul_monomial(mono_from_vars(t.mul))
    for v in t.inv:
        terms = dict(p.terms)
        out = dict(terms)
        for m, c in terms.items():
            mm = _mono_times_var(m, v)
            s = out.get(mm, 0) - c
            if s == 0:
                out.pop(mm, None)
            else:
                out[mm] = s
        p = Polynomial._raw(out)
    return p.scale(t.alpha)


def _mono_times_var(m: tuple, v: VarId) -> tuple:
    out, done = [], False
    for u, e in m:
        if u == v:
            out.append((u, e + 1))
            done = True
        else:
            if not done and v < u:
                out.append((v, 1))
                done = True
            out.append((u, e))
    if not done:
        out.append((v, 1))
    return tuple(out)


def _system_polys(system) -> tuple:
    return system.polys if isinstance(system, PolynomialSystem) else tuple(system)


def _check_flavor(c: Certificate, i: int, t: Term):
    if t.alpha < 0:
        raise CertificateError(f"term {i} has negative coefficient {t.alpha}", term_index=i)
    b = t.base
    if isinstance(b, (CompUp, CompDown)) and c.flavor != "SAR":
        raise CertificateError(f"term {i}: complementarity axioms need flavor SAR", term_index=i)
    if isinstance(b, Square) and c.flavor != "LAS":
        raise CertificateError(f"term {i}: squares need flavor LAS", term_index=i)
    if c.flavor != "SAR":
        twins = [v for v in t.mul + t.inv if v.twin]
        if isinstance(b, (BoolUp, BoolDown)) and b.var.twin:
            twins.append(b.var)
        if twins:
            raise CertificateError(f"term {i}: twin variable {twins[0]} outside SAR", term_index=i)


def verify_certificate(c: Certificate, system, blocks: Callable = pigeon_blocks) -> CertMetrics:
    """Expand every term exactly and compare the sum with the target."""
    polys = _system_polys(system)
    if c.flavor not in FLAVORS:
        raise CertificateError(f"unknown flavor {c.flavor!r}")
    total = {}
    rank = size = prank = 0
    for i, t in enumerate(c.terms):
        _check_flavor(c, i, t)
        e = expand_term(t, polys)
        size += len(e)
        rank = max(rank, e.degree())
        prank = max(prank, e.block_degree(blocks))
        for m, a in e.terms.items():
            s = total.get(m, 0) + a
            if s == 0:
                total.pop(m, None)
            else:
                total[m] = s
    got = Polynomial(total)
    if got != c.target:
        raise CertificateError("terms do not sum to the target", got - c.target)
    return CertMetrics(rank, size, prank, c.target == Polynomial.const(-1))


# ---------------------------------------------------------------- clause products


def _factor(lit: Literal, flavor: str) -> tuple:
    """How a literal enters M(C): ('mul', var) or ('inv', var).

    In SAR a positive literal contributes the twin of its variable; in SA it
    contributes (1 - x).  A negative literal always contributes x.
    """
    if not lit.positive:
        return ("mul", lit.var)
    if flavor == "SAR":
        return ("mul", lit.var.twinned())
    return ("inv", lit.var)


def clause_product(c, flavor: str) -> tuple:
    """(mul, inv) lists whose product is M(c)."""
    mul, inv = [], []
    for lit in sorted_lits(c):
        kind, v = _factor(lit, flavor)
        (mul if kind == "mul" else inv).append(v)
    return mul, inv


def clause_product_poly(c, flavor: str) -> Polynomial:
    mul, inv = clause_product(c, flavor)
    return expand_term(term(1, mul, inv), ())


def sim_axiom(c, index: int, flavor: str = "SAR") -> Certificate:
    """Fragment deriving -M(c) >= 0 from the axiom sum-encoding of c at ``index``."""
    lits = sorted_lits(c)
    if not lits:
        return Certificate(flavor, Polynomial.const(-1), [term(1, base=Initial(index))])
    # prefer a negative literal to close the derivation (no complementarity needed)
    first = next((l for l in lits if not l.positive), lits[0])
    rest = [l for l in lits if l != first]
    mul, inv = clause_product(rest, flavor)
    out = [term(1, mul, inv, Initial(index))]
    for l in rest:
        others = [o for o in rest if o != l]
        m2, i2 = clause_product(others, flavor)
        out.append(term(1, m2, i2, BoolUp(l.var)))
        if l.positive and flavor == "SAR":
            out.append(term(1, m2 + [l.var], i2, CompUp(l.var)))
    if first.positive and flavor == "SAR":
        out.append(term(1, mul, inv, CompUp(first.var)))
    return Certificate(flavor, -clause_product_poly(c, flavor), out)


def sim_weakening(a, b, flavor: str = "SAR") -> Certificate:
    """Fragment deriving M(a) - M(b) >= 0 for a subset of b, by telescoping."""
    a, b = frozenset(a), frozenset(b)
    if not a <= b:
        raise ValueError("weakening needs a subset")
    base_mul, base_inv = clause_product(a, flavor)
    extra = sorted_lits(b - a)
    out = []
    pm, pi = [], []
    for lit in extra:
        kind, v = _factor(lit, flavor)
        # (1 - f) * M(a) * prod of earlier factors
        if kind == "mul":
            out.append(term(1, base_mul + pm, base_inv + pi + [v]))
            pm = pm + [v]
        else:
            out.append(term(1, base_mul + pm + [v], base_inv + pi))
            pi = pi + [v]
    target = clause_product_poly(a, flavor) - clause_product_poly(b, flavor)
    return Certificate(flavor, target, out)


def sim_resolve(a, b, x: VarId, flavor: str = "SAR") -> Certificate:
    """Fragment deriving M(a or x) + M(b or not x) - M(a or b) >= 0."""
    a, b = frozenset(a), frozenset(b)
    ab = a | b
    cert = (sim_weakening(a | {pos(x)}, ab | {pos(x)}, flavor)
            + sim_weakening(b | {neg(x)}, ab | {neg(x)}, flavor))
    if flavor == "SAR":
        mul, inv = clause_product(ab, flavor)
        cert = cert + Certificate(flavor, Polynomial(), [term(1, mul, inv, CompDown(x))])
        cert.target = (clause_product_poly(a | {pos(x)}, flavor)
                       + clause_product_poly(b | {neg(x)}, flavor)
                       - clause_product_poly(ab, flavor))
    return cert


def dag_weights(proof: ResolutionProof) -> list:
    """Weight 1 on the last step; every other step gets the sum over its uses."""
    w = [0] * len(proof.steps)
    if w:
        w[-1] = 1
    for t in range(len(proof.steps) - 1, -1, -1):
        for i in premises(proof.steps[t]):
            w[i] += w[t]
    return w


def simulate_resolution_sar(proof: ResolutionProof, f: CnfFormula, flavor: str = "SAR") -> Certificate:
    """SA or SAR refutation of s_system(f) built from a resolution refutation."""
    if flavor not in ("SA", "SAR"):
        raise ValueError("flavor must be SA or SAR")
    cls = derive_clauses(proof, f)
    weights = dag_weights(proof)
    terms = []
    for t, s in enumerate(proof.steps):
        wt = weights[t]
        if wt == 0:
            continue
        if isinstance(s, Axiom):
            frag = sim_axiom(cls[t], s.index, flavor)
        elif isinstance(s, Weaken):
            frag = sim_weakening(cls[s.i], cls[t], flavor)
        else:
            frag = sim_resolve(cls[s.i] - {pos(s.pivot)}, cls[s.j] - {neg(s.pivot)}, s.pivot, flavor)
        terms += [tm._replace(alpha=tm.alpha * wt) for tm in frag.terms]
    return Certificate(flavor, Polynomial.const(-1), terms)


def sar_to_sa(c: Certificate) -> Certificate:
    """Replace each twin by one minus its variable."""
    if c.flavor != "SAR":
        raise ValueError("expected an SAR certificate")
    sub = {}
    out = []
    for t in c.terms:
        b = t.base
        if isinstance(b, (CompUp, CompDown)):
            continue
        mul = [v for v in t.mul if not v.twin] + [v.base for v in t.inv if v.twin]
        inv = [v for v in t.inv if not v.twin] + [v.base for v in t.mul if v.twin]
        if isinstance(b, (BoolUp, BoolDown)) and b.var.twin:
            b = type(b)(b.var.base)
        elif isinstance(b, Square):
            b = Square(_untwin(b.poly, sub))
        out.append(term(t.alpha, mul, inv, b))
    return Certificate("SA", _untwin(c.target, sub), out)


def _untwin(p: Polynomial, cache: dict) -> Polynomial:
    mapping = {}
    for v in p.variables():
        if v.twin:
            mapping[v] = Polynomial.const(1) - Polynomial.var(v.base)
    return p.substitute(mapping) if mapping else p


# ---------------------------------------------------------------- Lasserre


def times_poly(terms: list, p: Polynomial) -> list:
    """Multiply each term by a polynomial with nonnegative coefficients."""
    out = []
    for m, c in p.sorted_terms():
        if c < 0:
            raise ValueError("multiplier must have nonnegative coefficients")
        vs = [v for v, e in m for _ in range(e)]
        for t in terms:
            out.append(term(t.alpha * c, list(t.mul) + vs, t.inv, t.base))
    return out


def identity_terms(zs: list, pair_times: Callable, bool_frag: Callable) -> list:
    """Terms summing to 1 - sum(zs).

    pair_times(i, j) must give terms summing to (1 - z_i - z_j) z_j and
    bool_frag(j) terms summing to z_j^2 - z_j.
    """
    n = len(zs)
    if n < 2:
        raise ValueError("the identity needs at least two summands")
    out = []
    for i in range(n):
        for j in range(n):
            if i != j:
                out += pair_times(i, j)
    if n > 2:
        for j in range(n):
            out += [t._replace(alpha=t.alpha * (n - 2)) for t in bool_frag(j)]
    out.append(term(1, base=Square(Polynomial.const(1) - sum(zs, Polynomial()))))
    return out


def identity_lhs(zs: list) -> Polynomial:
    """Left-hand side of the identity, expanded directly."""
    n = len(zs)
    one = Polynomial.const(1)
    lhs = Polynomial()
    for i in range(n):
        for j in range(n):
            if i != j:
                lhs = lhs + (one - zs[i] - zs[j]) * zs[j]
    for z in zs:
        lhs = lhs + (z * z - z).scale(n - 2)
    s = one - sum(zs, Polynomial())
    return lhs + s * s


def pair_system(vs: list) -> tuple:
    """Inequalities 1 - z_i - z_j >= 0, one per unordered pair."""
    zs = [Polynomial.var(v) for v in vs]
    index, polys = {}, []
    for i in range(len(vs)):
        for j in range(i + 1, len(vs)):
            index[(i, j)] = index[(j, i)] = len(polys)
            polys.append(Polynomial.const(1) - zs[i] - zs[j])
    return PolynomialSystem(f"pairs{len(vs)}", tuple(polys), "ineq"), index


def lasserre_identity(zvars) -> tuple:
    """Rank-2 derivation of 1 - sum z_i >= 0 from the pairwise inequalities.

    zvars is a list of distinct variables or a count n (variables v[1..n]).
    Returns (system of pair inequalities, certificate).
    """
    vs = [VarId("v", (i,)) for i in range(1, zvars + 1)] if isinstance(zvars, int) else list(zvars)
    if len(vs) < 2:
        raise ValueError("the identity needs at least two summands")
    system, index = pair_system(vs)
    zs = [Polynomial.var(v) for v in vs]
    terms = identity_terms(
        zs,
        lambda i, j: [term(1, [vs[j]], (), Initial(index[(i, j)]))],
        lambda j: [term(1, base=BoolUp(vs[j]))],
    )
    return system, Certificate("LAS", Polynomial.const(1) - sum(zs, Polynomial()), terms)


def lasserre_php(k: int) -> Certificate:
    """Rank-2 Lasserre refutation of s_system(gen_php(k))."""
    f = gen_php(k)
    terms = []
    for w in range(1, k):
        xs = [X(u, w) for u in range(1, k + 1)]

        def hole(i, j, xs=xs):
            return [term(1, [xs[j]], (), Initial(f.index_of(frozenset([neg(xs[i]), neg(xs[j])]))))]

        terms += identity_terms([Polynomial.var(x) for x in xs], hole,
                                lambda j, xs=xs: [term(1, base=BoolUp(xs[j]))])
    for u in range(1, k + 1):
        terms.append(term(1, base=Initial(u - 1)))
    return Certificate("LAS", Polynomial.const(-1), terms)


def _rphp_index(f: CnfFormula):
    def idx(*lits):
        return f.index_of(frozenset(lits))
    return idx


def _rq_terms(f, n, w):
    """Terms summing to 1 - sum_l r[l] q[l,w]."""
    idx = _rphp_index(f)

    def qinj(l, m, w):
        return idx(neg(R(l)), neg(R(m)), neg(Q(l, w)), neg(Q(m, w)))

    def pair(i, j):
        li, lj = i + 1, j + 1
        ri, rj, qi, qj = R(li), R(lj), Q(li, w), Q(lj, w)
        return [
            term(1, [qj, ri, qi], (), Initial(qinj(min(li, lj), max(li, lj), w))),
            term(1, [ri, qi], (), BoolUp(qj)),
            term(1, [ri, qj], (), BoolUp(qi)),
            term(1, [qj, qi], (), BoolUp(ri)),
            term(1, [qj], (), BoolDown(rj)),
            term(1, [rj, rj], (), BoolDown(qj)),
        ]

    def bool_z(j):
        l = j + 1
        return [term(1, [Q(l, w), Q(l, w)], (), BoolUp(R(l))), term(1, [R(l)], (), BoolUp(Q(l, w)))]

    var = Polynomial.var
    zs = [var(R(l)) * var(Q(l, w)) for l in range(1, n + 1)]
    return identity_terms(zs, pair, bool_z)


def lasserre_hole_block(k: int, n: int, w: int) -> Certificate:
    """Derivation of 1 - sum_l r[l] q[l,w] >= 0 from s_system(gen_rphp(k, n))."""
    f = gen_rphp(k, n)
    target = Polynomial.const(1) - sum((Polynomial.var(R(l)) * Polynomial.var(Q(l, w))
                                        for l in range(1, n + 1)), Polynomial())
    return Certificate("LAS", target, _rq_terms(f, n, w))


def lasserre_rphp(k: int, n: int, max_terms: int = 2_000_000) -> Certificate:
    """Lasserre refutation of s_system(gen_rphp(k, n)).

    The refutation of the plain pigeonhole formula is replayed with
    x[u,w] standing for sum over l of p[u,l] r[l] q[l,w].
    """
    est = (k - 1) * k * (k - 1) * n * (6 * n * n + 4 * n)
    if est > max_terms:
        raise ValueError(f"certificate would need about {est} terms (limit {max_terms})")
    f = gen_rphp(k, n)
    idx = _rphp_index(f)
    var = Polynomial.var

    def xpoly(u, w):
        return sum((var(P(u, l)) * var(R(l)) * var(Q(l, w)) for l in range(1, n + 1)), Polynomial())

    def bool_x(u, w):
        """Terms summing to x^2 - x."""
        out = []
        for l in range(1, n + 1):
            for m in range(1, n + 1):
                if l == m:
                    continue
                out.append(term(1, [P(u, l), P(u, m), R(l), R(m), Q(l, w), Q(m, w)]))
        for l in range(1, n + 1):
            out.append(term(1, [R(l), R(l), Q(l, w), Q(l, w)], (), BoolUp(P(u, l))))
            out.append(term(1, [P(u, l), Q(l, w), Q(l, w)], (), BoolUp(R(l))))
            out.append(term(1, [P(u, l), R(l)], (), BoolUp(Q(l, w))))
        return out

    def pigeon_x(u):
        """Terms summing to sum_w x[u,w] - 1."""
        out = []
        for l in range(1, n + 1):
            qdef = idx(neg(R(l)), *[pos(Q(l, w)) for w in range(1, k)])
            out.append(term(1, [P(u, l), R(l)], (), Initial(qdef)))
            out.append(term(1, [P(u, l)], (), BoolUp(R(l))))
            out.append(term(1, [P(u, l)], (), Initial(idx(neg(P(u, l)), pos(R(l))))))
            out.append(term(1, base=BoolUp(P(u, l))))
        out.append(term(1, base=Initial(u - 1)))
        return out

    terms = []
    for w in range(1, k):
        rq = _rq_terms(f, n, w)
        xs = [xpoly(u, w) for u in range(1, k + 1)]

        def pair_x(i, j, w=w, rq=rq, xs=xs):
            u, v = i + 1, j + 1
            one_minus = [term(1, [R(l), Q(l, w)], (), Initial(idx(neg(P(min(u, v), l)), neg(P(max(u, v), l)))))
                         for l in range(1, n + 1)] + rq
            return times_poly(one_minus, xs[j])

        terms += identity_terms(xs, pair_x, lambda j, w=w: bool_x(j + 1, w))
    for u in range(1, k + 1):
        terms += pigeon_x(u)
    return Certificate("LAS", Polynomial.const(-1), terms)


def lasserre_erphp(k: int, n: int, max_terms: int = 2_000_000) -> Certificate:
    """Refutation of s_system(gen_erphp(k, n)): each wide axiom is replaced by
    the narrow axioms whose encodings add up to it."""
    wide = lasserre_rphp(k, n, max_terms)
    split = narrow_split(k, n)
    out = []
    for t in wide.terms:
        if isinstance(t.base, Initial):
            out += [t._replace(base=Initial(j)) for j in split[t.base.index]]
        else:
            out.append(t)
    return Certificate("LAS", wide.target, out)


# ---------------------------------------------------------------- restriction


def restrict_system(system, rho) -> PolynomialSystem:
    polys = _system_polys(system)
    name = system.name + "|rho" if isinstance(system, PolynomialSystem) else "restricted"
    conv = getattr(system, "convention", "ineq")
    return PolynomialSystem(name, tuple(restrict_poly(p, rho, conv) for p in polys), conv)


def restrict_certificate(c: Certificate, system, rho) -> tuple:
    """Apply rho (true is 1) to every term; returns (restricted system, certificate).

    Initial indices keep pointing at the same positions of the restricted
    system, so each surviving term is the restriction of the original one
    and neither rank nor size can grow.
    """
    rho = as_assignment(rho)
    out = []
    for t in c.terms:
        mul, inv, dead = [], [], False
        for v in t.mul:
            val = value_of(v, rho)
            if val == 0:
                dead = True
                break
            if val is None:
                mul.append(v)
        if dead:
            continue
        for v in t.inv:
            val = value_of(v, rho)
            if val == 1:
                dead = True
                break
            if val is None:
                inv.append(v)
        if dead:
            continue
        b = t.base
        if isinstance(b, (BoolUp, BoolDown, CompUp, CompDown)):
            if value_of(b.var, rho) is not None:
                continue
        elif isinstance(b, Square):
            b = Square(restrict_poly(b.poly, rho))
        out.append(term(t.alpha, mul, inv, b))
    return restrict_system(system, rho), Certificate(c.flavor, restrict_poly(c.target, rho), out)
