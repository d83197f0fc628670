"""Variables, clauses and the pigeonhole formula families.

Variables are structured identifiers such as ``p[2,5]`` or ``rr[1,3]``.
Every generator is a pure function of its parameters and returns clauses in
a fixed order, so clause indices are stable across runs.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, NamedTuple

KINDS = ("p", "y", "r", "rr", "q", "z", "x", "v")
_ARITY = {"p": 2, "y": 2, "r": 1, "rr": 2, "q": 2, "z": 2, "x": 2, "v": 1}


class ParameterError(ValueError):
    pass


class VarId(NamedTuple):
    kind: str
    idx: tuple
    twin: bool = False

    @property
    def name(self) -> str:
        s = f"{self.kind}[{','.join(map(str, self.idx))}]"
        return s + "'" if self.twin else s

    @property
    def base(self) -> "VarId":
        return VarId(self.kind, self.idx) if self.twin else self

    def twinned(self) -> "VarId":
        return VarId(self.kind, self.idx, not self.twin)

    def __str__(self):
        return self.name

    def __repr__(self):
        return self.name


def P(u, v):
    return VarId("p", (u, v))


def Y(u, v):
    return VarId("y", (u, v))


def R(v):
    return VarId("r", (v,))


def RR(v, w):
    if v == w:
        raise ParameterError("rr needs two distinct indices")
    return VarId("rr", (min(v, w), max(v, w)))


def Q(v, w):
    return VarId("q", (v, w))


def Z(v, w):
    return VarId("z", (v, w))


def X(u, w):
    return VarId("x", (u, w))


def V(i):
    """A plain numbered variable, used for formulas outside the families."""
    return VarId("v", (i,))


_NAME_RE = re.compile(r"^(rr|[pyrqzxv])\[(\d+(?:,\d+)*)\]('?)$")


def parse_var(text: str) -> VarId:
    m = _NAME_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad variable name: {text!r}")
    kind, idx, tw = m.groups()
    idx = tuple(int(t) for t in idx.split(","))
    if len(idx) != _ARITY[kind]:
        raise ValueError(f"wrong number of indices in {text!r}")
    if kind == "rr":
        if idx[0] == idx[1]:
            raise ValueError(f"rr needs distinct indices: {text!r}")
        idx = tuple(sorted(idx))
    return VarId(kind, idx, bool(tw))


class Literal(NamedTuple):
    var: VarId
    positive: bool = True

    def negate(self) -> "Literal":
        return Literal(self.var, not self.positive)

    def __str__(self):
        return self.var.name if self.positive else "-" + self.var.name

    __repr__ = __str__


def pos(v: VarId) -> Literal:
    return Literal(v, True)


def neg(v: VarId) -> Literal:
    return Literal(v, False)


def parse_literal(text: str) -> Literal:
    text = text.strip()
    if text.startswith("-") or text.startswith("~"):
        return Literal(parse_var(text[1:]), False)
    return Literal(parse_var(text), True)


# A clause is a frozenset of literals; ``clause`` validates one.
Clause = frozenset


def clause(lits: Iterable[Literal]) -> frozenset:
    c = frozenset(lits)
    seen = set()
    for lit in c:
        if lit.var.twin:
            raise ValueError(f"twin variable {lit.var} inside a clause")
        if lit.var in seen:
            raise ValueError(f"clause contains both polarities of {lit.var}")
        seen.add(lit.var)
    return c


def is_tautology(lits: Iterable[Literal]) -> bool:
    seen = {}
    for lit in lits:
        if seen.setdefault(lit.var, lit.positive) != lit.positive:
            return True
    return False


def sorted_lits(c) -> list:
    return sorted(c, key=lambda l: (l.var, not l.positive))


def clause_str(c) -> str:
    if not c:
        return "{}"
    return " ".join(str(l) for l in sorted_lits(c))


def parse_clause(text: str) -> frozenset:
    text = text.strip()
    if text in ("", "{}"):
        return frozenset()
    return clause(parse_literal(t) for t in text.split())


def clause_vars(c) -> frozenset:
    return frozenset(l.var for l in c)


@dataclass(frozen=True)
class CnfFormula:
    family: str
    k: int | None
    n: int | None
    clauses: tuple
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        index = {}
        for i, c in enumerate(self.clauses):
            if c in index:
                raise ValueError(f"duplicate clause {clause_str(c)}")
            index[c] = i
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.clauses)

    def index_of(self, c) -> int:
        try:
            return self._index[c]
        except KeyError:
            raise KeyError(f"clause {clause_str(c)} is not in the formula") from None

    def __contains__(self, c):
        return c in self._index

    def variables(self) -> list:
        vs = set()
        for c in self.clauses:
            vs.update(l.var for l in c)
        return sorted(vs)

    def census(self) -> dict:
        out = {}
        for v in self.variables():
            out[v.kind] = out.get(v.kind, 0) + 1
        return out

    @property
    def width(self) -> int:
        return max((len(c) for c in self.clauses), default=0)

    def params(self) -> tuple:
        return (self.family, self.k, self.n)


# ---------------------------------------------------------------- generators


def gen_php(k: int) -> CnfFormula:
    """k pigeons into k-1 holes over x[u,w]."""
    if k < 2:
        raise ParameterError("php needs k >= 2")
    cls = [clause(pos(X(u, w)) for w in range(1, k)) for u in range(1, k + 1)]
    for w in range(1, k):
        for u, v in combinations(range(1, k + 1), 2):
            cls.append(clause([neg(X(u, w)), neg(X(v, w))]))
    return CnfFormula("php", k, None, tuple(cls))


def _q_chain(v: int, k: int, head: list) -> list:
    """The 3-clause split of ``head or q[v,1] or ... or q[v,k-1]``."""
    out = [clause(head + [pos(Q(v, 1)), pos(Z(v, 1))])]
    for w in range(1, k - 3):
        out.append(clause([neg(Z(v, w)), pos(Q(v, w + 1)), pos(Z(v, w + 1))]))
    out.append(clause([neg(Z(v, k - 3)), pos(Q(v, k - 2)), pos(Q(v, k - 1))]))
    return out


def _p_chain(u: int, n: int) -> list:
    out = [clause([pos(P(u, 1)), pos(P(u, 2)), pos(Y(u, 2))])]
    for v in range(2, n - 2):
        out.append(clause([neg(Y(u, v)), pos(P(u, v + 1)), pos(Y(u, v + 1))]))
    out.append(clause([neg(Y(u, n - 2)), pos(P(u, n - 1)), pos(P(u, n))]))
    return out


def _q_injective(pigeons: int, holes: int) -> list:
    return [clause([neg(Q(v, w)), neg(Q(v2, w))])
            for w in range(1, holes + 1)
            for v, v2 in combinations(range(1, pigeons + 1), 2)]


def gen_tphp(k: int) -> CnfFormula:
    """The 3-CNF pigeonhole formula left over after a restriction.

    k = 3 is accepted as an extension: the chain degenerates to the single
    clause q[v,1] or q[v,2].
    """
    if k < 3:
        raise ParameterError("tphp needs k >= 4 (k = 3 as a degenerate extension)")
    cls = []
    if k == 3:
        cls += [clause([pos(Q(v, 1)), pos(Q(v, 2))]) for v in range(1, k + 1)]
    else:
        chains = [_q_chain(v, k, []) for v in range(1, k + 1)]
        cls += [ch[0] for ch in chains]
        cls += [c for ch in chains for c in ch[1:-1]]
        cls += [ch[-1] for ch in chains]
    cls += _q_injective(k, k - 1)
    return CnfFormula("tphp", k, None, tuple(cls))


def gen_rphp(k: int, n: int) -> CnfFormula:
    """Relativized pigeonhole principle with wide clauses."""
    if k < 2 or k > n:
        raise ParameterError("rphp needs 2 <= k <= n")
    cls = [clause(pos(P(u, v)) for v in range(1, n + 1)) for u in range(1, k + 1)]
    cls += [clause([neg(P(u, v)), neg(P(u2, v))])
            for v in range(1, n + 1) for u, u2 in combinations(range(1, k + 1), 2)]
    cls += [clause([neg(P(u, v)), pos(R(v))]) for u in range(1, k + 1) for v in range(1, n + 1)]
    cls += [clause([neg(R(v))] + [pos(Q(v, w)) for w in range(1, k)]) for v in range(1, n + 1)]
    cls += [clause([neg(R(v)), neg(R(v2)), neg(Q(v, w)), neg(Q(v2, w))])
            for w in range(1, k) for v, v2 in combinations(range(1, n + 1), 2)]
    return CnfFormula("rphp", k, n, tuple(cls))


def gen_erphp(k: int, n: int) -> CnfFormula:
    """3-CNF version of the relativized pigeonhole principle.

    Groups, in order: pigeon chains (first, middle, last clauses), hole
    chains (first, middle, last), p-injectivity, p-image, r-pairs and
    q-injectivity.
    """
    if k < 4 or n < 4 or k > n:
        raise ParameterError("erphp needs 4 <= k <= n")
    pch = [_p_chain(u, n) for u in range(1, k + 1)]
    qch = [_q_chain(v, k, [neg(R(v))]) for v in range(1, n + 1)]
    cls = [ch[0] for ch in pch]
    cls += [c for ch in pch for c in ch[1:-1]]
    cls += [ch[-1] for ch in pch]
    cls += [ch[0] for ch in qch]
    cls += [c for ch in qch for c in ch[1:-1]]
    cls += [ch[-1] for ch in qch]
    cls += [clause([neg(P(u, v)), neg(P(u2, v))])
            for v in range(1, n + 1) for u, u2 in combinations(range(1, k + 1), 2)]
    cls += [clause([neg(P(u, v)), pos(R(v))]) for u in range(1, k + 1) for v in range(1, n + 1)]
    pairs = list(combinations(range(1, n + 1), 2))
    cls += [clause([neg(R(v)), neg(R(v2)), pos(RR(v, v2))]) for v, v2 in pairs]
    cls += [clause([neg(RR(v, v2)), neg(Q(v, w)), neg(Q(v2, w))])
            for w in range(1, k) for v, v2 in pairs]
    return CnfFormula("erphp", k, n, tuple(cls))


def narrow_split(k: int, n: int) -> dict:
    """Map each clause index of gen_rphp(k, n) to the gen_erphp(k, n) indices
    whose additive encodings sum to the wide clause's encoding."""
    wide, narrow = gen_rphp(k, n), gen_erphp(k, n)
    out = {}
    for i, c in enumerate(wide.clauses):
        if c in narrow:
            out[i] = [narrow.index_of(c)]
            continue
        negs = [l.var for l in c if not l.positive]
        if not negs:  # pigeon clause p[u,1] or ... or p[u,n]
            u = next(iter(c)).var.idx[0]
            parts = _p_chain(u, n)
        elif len(negs) == 1:  # not r[v] or q[v,1] or ...
            parts = _q_chain(negs[0].idx[0], k, [neg(negs[0])])
        else:
            rs = sorted(v.idx[0] for v in negs if v.kind == "r")
            w = next(v.idx[1] for v in negs if v.kind == "q")
            parts = [clause([neg(R(rs[0])), neg(R(rs[1])), pos(RR(*rs))]),
                     clause([neg(RR(*rs)), neg(Q(rs[0], w)), neg(Q(rs[1], w))])]
        out[i] = [narrow.index_of(p) for p in parts]
    return out


# ---------------------------------------------------------------- validation


def _expected_ranges(f: CnfFormula) -> dict:
    k, n = f.k, f.n
    if f.family == "php":
        return {"x": [(1, k), (1, k - 1)]}
    if f.family == "tphp":
        return {"q": [(1, k), (1, k - 1)], "z": [(1, k), (1, k - 3)]}
    if f.family == "rphp":
        return {"p": [(1, k), (1, n)], "r": [(1, n)], "q": [(1, n), (1, k - 1)]}
    if f.family == "erphp":
        return {"p": [(1, k), (1, n)], "y": [(1, k), (2, n - 2)], "r": [(1, n)],
                "rr": [(1, n), (1, n)], "q": [(1, n), (1, k - 1)], "z": [(1, n), (1, k - 3)]}
    return {}


def validate_formula(f: CnfFormula, max_width: int | None = None) -> list:
    """Structural checks; returns a list of problems (empty when fine)."""
    problems = []
    ranges = _expected_ranges(f)
    if max_width is None:
        max_width = {"tphp": 3, "erphp": 3, "php": max((f.k or 2) - 1, 2)}.get(f.family)
    for i, c in enumerate(f.clauses):
        if is_tautology(c):
            problems.append(f"clause {i} is tautological")
        if max_width is not None and len(c) > max_width:
            problems.append(f"clause {i} has width {len(c)} > {max_width}")
        for lit in c:
            v = lit.var
            if v.twin:
                problems.append(f"clause {i} contains twin {v}")
            if ranges and v.kind not in ranges:
                problems.append(f"clause {i}: unexpected variable kind {v.kind}")
                continue
            for j, (lo, hi) in enumerate(ranges.get(v.kind, [])):
                if not lo <= v.idx[j] <= hi:
                    problems.append(f"clause {i}: {v} index out of range")
    return problems


# ---------------------------------------------------------------- polynomial encodings


@dataclass(frozen=True)
class PolynomialSystem:
    """A list of polynomials with a reading convention.

    convention "pcr": each polynomial is an equation p = 0 (true is 0).
    convention "ineq": each polynomial is an inequality p >= 0 (true is 1).
    """
    name: str
    polys: tuple
    convention: str = "pcr"

    def __len__(self):
        return len(self.polys)

    def __getitem__(self, i):
        return self.polys[i]


def gen_aphp(k: int) -> PolynomialSystem:
    from .algebra import Polynomial

    if k < 2:
        raise ParameterError("aphp needs k >= 2")
    one = Polynomial.const(1)
    polys = []
    for v in range(1, k + 1):
        p = one
        for w in range(1, k):
            p = p - Polynomial.var(X(v, w))
        polys.append(p)
    for w in range(1, k):
        for v, v2 in combinations(range(1, k + 1), 2):
            polys.append(Polynomial.var(X(v, w)) * Polynomial.var(X(v2, w)))
    for v in range(1, k + 1):
        for w, w2 in combinations(range(1, k), 2):
            polys.append(Polynomial.var(X(v, w)) * Polynomial.var(X(v, w2)))
    return PolynomialSystem(f"aphp{k}", tuple(polys), "pcr")


ENCODINGS = ("S", "S'", "M", "M'", "PCR")


def encode_clause(c, mode: str):
    """Polynomial encoding of a clause.

    S, S', M and M' give p with the meaning p >= 0 (true is 1); PCR gives the
    monomial m with the meaning m = 0 (true is 0).
    """
    from .algebra import Polynomial

    one = Polynomial.const(1)
    lits = sorted_lits(c)
    if mode == "S" or mode == "S'":
        p = -one
        for l in lits:
            if l.positive:
                p = p + Polynomial.var(l.var)
            elif mode == "S":
                p = p + one - Polynomial.var(l.var)
            else:
                p = p + Polynomial.var(l.var.twinned())
        return p
    if mode == "M" or mode == "M'":
        p = one
        for l in lits:
            if not l.positive:
                p = p * Polynomial.var(l.var)
            elif mode == "M":
                p = p * (one - Polynomial.var(l.var))
            else:
                p = p * Polynomial.var(l.var.twinned())
        return -p
    if mode == "PCR":
        p = one
        for l in lits:
            p = p * Polynomial.var(l.var if l.positive else l.var.twinned())
        return p
    raise ValueError(f"unknown encoding {mode!r}")


def pcr_system(f: CnfFormula) -> PolynomialSystem:
    return PolynomialSystem(f.family, tuple(encode_clause(c, "PCR") for c in f.clauses), "pcr")


def s_system(f: CnfFormula) -> PolynomialSystem:
    return PolynomialSystem(f.family, tuple(encode_clause(c, "S") for c in f.clauses), "ineq")


# ---------------------------------------------------------------- DIMACS


def export_dimacs(f: CnfFormula) -> str:
    vs = f.variables()
    num = {v: i + 1 for i, v in enumerate(vs)}
    lines = [f"c family {f.family} {f.k if f.k is not None else '-'} {f.n if f.n is not None else '-'}"]
    lines += [f"c {num[v]} = {v.name}" for v in vs]
    lines.append(f"p cnf {len(vs)} {len(f.clauses)}")
    for c in f.clauses:
        ints = [num[l.var] if l.positive else -num[l.var] for l in sorted_lits(c)]
        lines.append(" ".join(map(str, ints + [0])))
    return "\n".join(lines) + "\n"


def import_dimacs(text: str) -> CnfFormula:
    names, family, k, n = {}, "dimacs", None, None
    body = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line[1:].split()
            if len(parts) == 4 and parts[0] == "family":
                family = parts[1]
                k = None if parts[2] == "-" else int(parts[2])
                n = None if parts[3] == "-" else int(parts[3])
            elif len(parts) == 3 and parts[1] == "=":
                names[int(parts[0])] = parse_var(parts[2])
            continue
        if line.startswith("p"):
            continue
        body.extend(int(t) for t in line.split())
    cls, cur = [], []
    for t in body:
        if t == 0:
            cls.append(clause(cur))
            cur = []
        else:
            v = names.get(abs(t)) or V(abs(t))
            cur.append(Literal(v, t > 0))
    if cur:
        cls.append(clause(cur))
    return CnfFormula(family, k, n, tuple(cls))


def make_formula(clauses, family: str = "custom", k=None, n=None) -> CnfFormula:
    """Build a formula from clause-likes (iterables of literals), dropping repeats."""
    seen, out = set(), []
    for c in clauses:
        c = clause(c)
        if c not in seen:
            seen.add(c)
            out.append(c)
    return CnfFormula(family, k, n, tuple(out))


def pigeon_of(v: VarId):
    """Pigeon mentioned by a variable: q, z, x variables (and twins) name one."""
    if v.kind in ("q", "z", "x"):
        return v.idx[0]
    return None


def rename_pigeons(v: VarId, mapping: dict) -> VarId:
    if v.kind in ("q", "z"):
        return VarId(v.kind, (mapping[v.idx[0]],) + v.idx[1:], v.twin)
    return v


# ---------------------------------------------------------------- restriction of clauses


def as_assignment(rho) -> dict:
    """Accept a plain dict or anything with an ``assignment`` attribute."""
    return getattr(rho, "assignment", rho)


def restrict_clause(c, rho):
    """None when rho satisfies c, otherwise c minus its falsified literals."""
    rho = as_assignment(rho)
    keep = []
    for lit in c:
        b = rho.get(lit.var)
        if b is None:
            keep.append(lit)
        elif b == lit.positive:
            return None
    return frozenset(keep)


def restrict_formula(f: CnfFormula, rho) -> CnfFormula:
    """Drop satisfied clauses, shrink the rest, keep the first of any repeats."""
    out, seen = [], set()
    for c in f.clauses:
        r = restrict_clause(c, rho)
        if r is not None and r not in seen:
            seen.add(r)
            out.append(r)
    return CnfFormula("restricted", f.k, f.n, tuple(out))
