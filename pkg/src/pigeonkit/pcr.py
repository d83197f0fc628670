"""Polynomial calculus resolution (PCR).

Truth is read as 0: a clause becomes the monomial that multiplies its
positive variables with the twins of its negative variables, and a
refutation derives the polynomial 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple

from .algebra import Polynomial, parse_poly, pigeon_blocks, restrict_poly, value_of
from .formulas import (
    CnfFormula, PolynomialSystem, VarId, X, as_assignment, gen_aphp, gen_tphp,
    parse_var, pcr_system,
)
from .resolution import Axiom, ResolutionProof, Weaken, derive_clauses

# size(simulate_resolution_pcr(proof)) <= SIM_SIZE_CONSTANT * max(width, 1) * len(proof):
# a resolution step costs at most 2w one-term products, w + 1 three-term
# complementarity products and two short linear combinations, i.e. 5w + 6.
SIM_SIZE_CONSTANT = 11


class BooleanAxiom(NamedTuple):
    var: VarId


class Complementarity(NamedTuple):
    var: VarId


class Initial(NamedTuple):
    index: int


class LinComb(NamedTuple):
    i: int
    j: int
    a: object
    b: object


class Mult(NamedTuple):
    i: int
    var: VarId


class PcrError(ValueError):
    def __init__(self, step: int, msg: str, expected=None, found=None):
        text = f"step {step}: {msg}"
        if expected is not None:
            text += f"\n  expected: {expected}\n  found:    {found}\n  diff:     {found - expected}"
        super().__init__(text)
        self.step = step


@dataclass(frozen=True)
class PcrProof:
    steps: tuple
    claims: tuple | None = None   # optional claimed polynomial per step

    def __len__(self):
        return len(self.steps)

    def to_text(self, polys: list | None = None) -> str:
        polys = polys if polys is not None else self.claims
        lines = []
        for t, s in enumerate(self.steps):
            if isinstance(s, BooleanAxiom):
                line = f"{t} bool {s.var.name}"
            elif isinstance(s, Complementarity):
                line = f"{t} comp {s.var.name}"
            elif isinstance(s, Initial):
                line = f"{t} axiom {s.index}"
            elif isinstance(s, LinComb):
                line = f"{t} lin {s.i} {s.j} {Fraction(s.a)} {Fraction(s.b)}"
            else:
                line = f"{t} mul {s.i} {s.var.name}"
            if polys is not None:
                line += f" : {polys[t]}"
            lines.append(line)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PcrProof":
        steps, claims = [], []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            line, _, claim = line.partition(":")
            parts = line.split()
            if int(parts[0]) != len(steps):
                raise ValueError(f"step numbers out of order at {raw!r}")
            kind, args = parts[1], parts[2:]
            if kind == "bool":
                steps.append(BooleanAxiom(parse_var(args[0])))
            elif kind == "comp":
                steps.append(Complementarity(parse_var(args[0])))
            elif kind == "axiom":
                steps.append(Initial(int(args[0])))
            elif kind == "lin":
                steps.append(LinComb(int(args[0]), int(args[1]), _num(args[2]), _num(args[3])))
            elif kind == "mul":
                steps.append(Mult(int(args[0]), parse_var(args[1])))
            else:
                raise ValueError(f"unknown rule {kind!r}")
            claims.append(parse_poly(claim) if claim.strip() else None)
        has = any(c is not None for c in claims)
        return cls(tuple(steps), tuple(claims) if has else None)


def _num(text):
    c = Fraction(text)
    return c.numerator if c.denominator == 1 else c


@dataclass(frozen=True)
class PcrMetrics:
    size: int
    degree: int
    pigeon_degree: int
    refutation: bool


def system_to_text(s: PolynomialSystem) -> str:
    return "\n".join([f"system {s.convention} {s.name}"] + [f"poly {p}" for p in s.polys]) + "\n"


def system_from_text(text: str) -> PolynomialSystem:
    conv, name, polys = "pcr", "system", []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "system":
            bits = rest.split()
            conv = bits[0]
            name = bits[1] if len(bits) > 1 else name
        elif head == "poly":
            polys.append(parse_poly(rest))
        else:
            raise ValueError(f"unexpected line {line!r}")
    return PolynomialSystem(name, tuple(polys), conv)


def derive_polys(proof: PcrProof, system: PolynomialSystem, modulus: int | None = None) -> list:
    """Recompute every step exactly (or modulo a prime)."""
    out = []
    one = Polynomial.const(1)

    def norm(p):
        return p.mod(modulus) if modulus else p

    for t, s in enumerate(proof.steps):
        if isinstance(s, BooleanAxiom):
            x = Polynomial.var(s.var)
            p = x * x - x
        elif isinstance(s, Complementarity):
            if s.var.twin:
                raise PcrError(t, "complementarity axiom must name a base variable")
            p = Polynomial.var(s.var) + Polynomial.var(s.var.twinned()) - one
        elif isinstance(s, Initial):
            if not 0 <= s.index < len(system.polys):
                raise PcrError(t, f"initial index {s.index} out of range")
            p = system.polys[s.index]
        elif isinstance(s, LinComb):
            if not (0 <= s.i < t and 0 <= s.j < t):
                raise PcrError(t, "dangling reference")
            p = out[s.i].scale(s.a) + out[s.j].scale(s.b)
        elif isinstance(s, Mult):
            if not 0 <= s.i < t:
                raise PcrError(t, "dangling reference")
            p = out[s.i].mul_monomial(((s.var, 1),))
        else:
            raise PcrError(t, f"unknown step {s!r}")
        p = norm(p)
        if proof.claims is not None and proof.claims[t] is not None:
            claim = norm(proof.claims[t])
            if claim != p:
                raise PcrError(t, "claimed polynomial differs from the derived one", claim, p)
        out.append(p)
    return out


def verify_pcr(proof: PcrProof, system: PolynomialSystem, modulus: int | None = None,
               blocks: Callable = pigeon_blocks, require_refutation: bool = True) -> PcrMetrics:
    polys = derive_polys(proof, system, modulus)
    is_ref = bool(polys) and polys[-1] == Polynomial.const(1)
    if require_refutation and not is_ref:
        raise PcrError(len(polys) - 1, "last polynomial is not 1", Polynomial.const(1), polys[-1] if polys else Polynomial())
    return PcrMetrics(
        size=sum(len(p) for p in polys),
        degree=max((p.degree() for p in polys), default=0),
        pigeon_degree=max((p.block_degree(blocks) for p in polys), default=0),
        refutation=is_ref,
    )


class _Builder:
    def __init__(self):
        self.steps = []

    def add(self, s) -> int:
        self.steps.append(s)
        return len(self.steps) - 1


def _lits_poly_var(lit) -> VarId:
    return lit.var if lit.positive else lit.var.twinned()


def simulate_resolution_pcr(proof: ResolutionProof, f: CnfFormula) -> PcrProof:
    """Translate a resolution refutation of f into PCR over pcr_system(f)."""
    cls = derive_clauses(proof, f)
    b = _Builder()
    rep = []

    def mult_chain(i, lits):
        for lit in sorted(lits, key=lambda l: (l.var, not l.positive)):
            i = b.add(Mult(i, _lits_poly_var(lit)))
        return i

    for t, s in enumerate(proof.steps):
        if isinstance(s, Axiom):
            rep.append(b.add(Initial(s.index)))
        elif isinstance(s, Weaken):
            rep.append(mult_chain(rep[s.i], s.target - cls[s.i]))
        else:
            x = s.pivot
            A = cls[s.i] - {_lit(x, True)}
            B = cls[s.j] - {_lit(x, False)}
            U = A | B
            a = mult_chain(rep[s.i], B - A)
            c = mult_chain(rep[s.j], A - B)
            comp = mult_chain(b.add(Complementarity(x)), U)
            s1 = b.add(LinComb(a, c, 1, 1))
            rep.append(b.add(LinComb(s1, comp, 1, -1)))
    return PcrProof(tuple(b.steps))


def _lit(v, positive):
    from .formulas import Literal
    return Literal(v, positive)


# ---------------------------------------------------------------- restriction


def restrict_pcr(proof: PcrProof, system: PolynomialSystem, rho) -> tuple:
    """Restrict a PCR refutation; returns (restricted system, proof).

    Every step is mapped to a derivation of its restricted polynomial.
    Steps that restrict to 0 are dropped and their users adjusted, and
    steps the final one does not depend on are removed, so size and degree
    never grow.
    """
    rho = as_assignment(rho)
    polys = derive_polys(proof, system)
    rsys = PolynomialSystem(system.name + "|rho",
                            tuple(restrict_poly(p, rho, "pcr") for p in system.polys), "pcr")
    new = []
    rep = []   # new step index, or None when the restricted polynomial is 0

    def emit(s):
        new.append(s)
        return len(new) - 1

    def scaled(i, a):
        if a == 1:
            return i
        return emit(LinComb(i, i, a, 0))

    for t, s in enumerate(proof.steps):
        target = restrict_poly(polys[t], rho, "pcr")
        if not target:
            rep.append(None)
            continue
        if isinstance(s, (BooleanAxiom, Complementarity)):
            rep.append(emit(s))
        elif isinstance(s, Initial):
            rep.append(emit(s))
        elif isinstance(s, LinComb):
            i, j = rep[s.i], rep[s.j]
            if i is None:
                rep.append(scaled(j, s.b))
            elif j is None:
                rep.append(scaled(i, s.a))
            else:
                rep.append(emit(LinComb(i, j, s.a, s.b)))
        else:
            val = value_of(s.var, rho, "pcr")
            if val is None:
                rep.append(emit(Mult(rep[s.i], s.var)))
            else:   # val must be 1 here, otherwise the target would vanish
                rep.append(rep[s.i])
    out = _prune(new, rep[-1])
    return rsys, PcrProof(tuple(out))


def _refs(s) -> tuple:
    if isinstance(s, LinComb):
        return (s.i, s.j)
    if isinstance(s, Mult):
        return (s.i,)
    return ()


def _prune(steps: list, final: int) -> list:
    keep, stack = set(), [final]
    while stack:
        t = stack.pop()
        if t not in keep:
            keep.add(t)
            stack.extend(_refs(steps[t]))
    order = sorted(keep)
    renum = {t: i for i, t in enumerate(order)}
    out = []
    for t in order:
        s = steps[t]
        if isinstance(s, LinComb):
            s = LinComb(renum[s.i], renum[s.j], s.a, s.b)
        elif isinstance(s, Mult):
            s = Mult(renum[s.i], s.var)
        out.append(s)
    return out


# ---------------------------------------------------------------- from TPHP to APHP


def hole_substitution(k: int) -> dict:
    """q and z variables of the k-pigeon formula as linear forms in x."""
    one = Polynomial.const(1)
    sub = {}
    for v in range(1, k + 1):
        xs = [Polynomial.var(X(v, j)) for j in range(1, k)]
        for w in range(1, k):
            q = VarId("q", (v, w))
            sub[q] = one - xs[w - 1]
            sub[q.twinned()] = xs[w - 1]
        for w in range(1, max(k - 3, 0) + 1):
            z = VarId("z", (v, w))
            sub[z] = one - sum(xs[w:], Polynomial())
            sub[z.twinned()] = one - sum(xs[:w], Polynomial())
    return sub


def _collision(m: tuple):
    """First pair of x variables in a monomial sharing a pigeon or a hole."""
    xs = [v for v, _ in m]
    for a in range(len(xs)):
        for b in range(a + 1, len(xs)):
            u, w = xs[a].idx
            u2, w2 = xs[b].idx
            if u == u2 or w == w2:
                return xs[a], xs[b]
    return None


def reduce_matching(p: Polynomial) -> Polynomial:
    """Normal form modulo x^2 = x and the two kinds of collision monomials:
    what survives are monomials that describe partial matchings."""
    out = {}
    for m, c in p.terms.items():
        mm = tuple((v, 1) for v, _ in m)
        if _collision(mm):
            continue
        out[mm] = out.get(mm, 0) + c
    return Polynomial(out)


def delta_transform(proof: PcrProof, k: int) -> PcrProof:
    """Turn a PCR refutation of the k-pigeon 3-CNF formula into one of gen_aphp(k).

    Each step is replaced by a derivation of the reduced image of its
    polynomial under ``hole_substitution``.  The reduced images only contain
    matching monomials, so a refutation of pigeon-degree d becomes one of
    degree at most d + 1.
    """
    src = pcr_system(gen_tphp(k))
    try:
        polys = derive_polys(proof, src)
    except PcrError as e:
        raise ValueError(f"input is not a PCR derivation from the {k}-pigeon formula: {e}") from None
    if not polys or polys[-1] != Polynomial.const(1):
        raise ValueError("input is not a refutation")
    aphp = gen_aphp(k)
    sub = hole_substitution(k)
    lookup = {}
    for i, p in enumerate(aphp.polys):
        key, c = _monic(p)
        lookup.setdefault(key, (i, c))
    pair_index = {}
    for i, p in enumerate(aphp.polys):
        if len(p) == 1:
            m, _ = next(iter(p.terms.items()))
            if len(m) == 2:
                pair_index[frozenset(v for v, _ in m)] = i

    steps, have = [], []   # have[t]: polynomial derived by new step t

    def emit(s, poly):
        steps.append(s)
        have.append(poly)
        return len(steps) - 1

    def scaled(i, a):
        if i is None or a == 0:
            return None
        if a == 1:
            return i
        return emit(LinComb(i, i, a, 0), have[i].scale(a))

    def combine(parts):
        acc = None
        for i, a in parts:
            if i is None or a == 0:
                continue
            if acc is None:
                acc = scaled(i, a)
            else:
                acc = emit(LinComb(acc, i, 1, a), have[acc] + have[i].scale(a))
            if acc is not None and not have[acc]:
                acc = None
        return acc

    correction_cache = {}

    def mult_vars(i, vs):
        for v in vs:
            i = emit(Mult(i, v), have[i].mul_monomial(((v, 1),)))
        return i

    def correction(x: VarId, m: tuple):
        """Derive x*m minus its reduced form, for a matching monomial m."""
        key = (x, m)
        if key in correction_cache:
            return correction_cache[key]
        vs = [v for v, _ in m]
        res = None
        if x in vs:
            rest = [v for v in vs if v != x]
            b = emit(BooleanAxiom(x), Polynomial.var(x) * Polynomial.var(x) - Polynomial.var(x))
            res = mult_vars(b, rest)
        else:
            for v in vs:
                if v.idx[0] == x.idx[0] or v.idx[1] == x.idx[1]:
                    i = pair_index[frozenset((x, v))]
                    b = emit(Initial(i), aphp.polys[i])
                    res = mult_vars(b, [u for u in vs if u != v])
                    break
        correction_cache[key] = res
        return res

    def axiom_image(t, target):
        key, c = _monic(target)
        if key not in lookup:
            raise ValueError(f"step {t}: reduced image {target} is not a multiple of an APHP polynomial")
        i, c0 = lookup[key]
        base = emit(Initial(i), aphp.polys[i])
        return scaled(base, Fraction(c, c0))

    rep = []
    for t, s in enumerate(proof.steps):
        target = reduce_matching(polys[t].substitute(sub))
        if not target:
            rep.append(None)
            continue
        if isinstance(s, (BooleanAxiom, Complementarity, Initial)):
            r = axiom_image(t, target)
        elif isinstance(s, LinComb):
            r = combine([(rep[s.i], s.a), (rep[s.j], s.b)])
        else:
            i = rep[s.i]
            lin = sub[s.var]
            parts = []
            c0 = lin.constant()
            if c0:
                parts.append((i, c0))
            if i is not None:
                for mono, cj in lin.terms.items():
                    if not mono:
                        continue
                    x = mono[0][0]
                    parts.append((emit(Mult(i, x), have[i].mul_monomial(((x, 1),))), cj))
                    for m, a in have[i].terms.items():
                        d = correction(x, m)
                        if d is not None:
                            parts.append((d, -a * cj))
            r = combine(parts)
        got = have[r] if r is not None else Polynomial()
        if got != target:
            raise AssertionError(f"step {t}: derived {got}, wanted {target}")
        rep.append(r)
    out = _prune(steps, rep[-1])
    return PcrProof(tuple(out))


def _monic(p: Polynomial) -> tuple:
    """(p scaled so its leading coefficient is 1, that leading coefficient)."""
    terms = p.sorted_terms()
    c = terms[0][1]
    return p.scale(Fraction(1, 1) / c), c
