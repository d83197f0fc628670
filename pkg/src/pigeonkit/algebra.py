"""Sparse polynomials with exact rational coefficients.

A monomial is a sorted tuple of ``(VarId, exponent)`` pairs; a polynomial maps
monomials to nonzero coefficients (``int`` or ``Fraction``).  Twin variables
are ordinary ``VarId``s with ``twin=True``.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Mapping

from .formulas import VarId, parse_var, pigeon_of

ONE_MONO = ()


def _norm(c):
    if type(c) is Fraction and c.denominator == 1:
        return c.numerator
    return c


def mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def mono_from_vars(vs: Iterable[VarId]) -> tuple:
    d = {}
    for v in vs:
        d[v] = d.get(v, 0) + 1
    return tuple(sorted(d.items()))


def mono_degree(m: tuple) -> int:
    return sum(e for _, e in m)


def mono_str(m: tuple) -> str:
    return "*".join(v.name if e == 1 else f"{v.name}^{e}" for v, e in m)


class Polynomial:
    """Immutable sparse polynomial."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms = {}
        if terms:
            for m, c in terms.items():
                c = _norm(c)
                if c != 0:
                    self.terms[m] = c

    @classmethod
    def _raw(cls, terms: dict) -> "Polynomial":
        p = cls.__new__(cls)
        p.terms = terms
        return p

    @classmethod
    def const(cls, c) -> "Polynomial":
        return cls({ONE_MONO: c})

    @classmethod
    def var(cls, v: VarId) -> "Polynomial":
        return cls._raw({((v, 1),): 1})

    @classmethod
    def monomial(cls, vs: Iterable[VarId], c=1) -> "Polynomial":
        return cls({mono_from_vars(vs): c})

    # ---------------------------------------------------------- arithmetic

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.const(other)
        if len(other.terms) > len(self.terms):
            self, other = other, self
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = _norm(s)
        return Polynomial._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = _norm(c)
        if c == 0:
            return Polynomial()
        return Polynomial._raw({m: _norm(a * c) for m, a in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                s = out.get(m, 0) + c1 * c2
                if s == 0:
                    out.pop(m, None)
                else:
                    out[m] = s
        return Polynomial._raw({m: _norm(c) for m, c in out.items()})

    __rmul__ = __mul__

    def mul_monomial(self, mono: tuple, c=1) -> "Polynomial":
        if not mono:
            return self.scale(c)
        return Polynomial._raw({mono_mul(m, mono): _norm(a * c) for m, a in self.terms.items()})

    def __pow__(self, e: int):
        out = Polynomial.const(1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.const(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    # ---------------------------------------------------------- measures

    def degree(self) -> int:
        return max((mono_degree(m) for m in self.terms), default=0)

    def block_degree(self, blocks: Callable = None, strict: bool = False) -> int:
        blocks = blocks or pigeon_blocks
        best = 0
        for m in self.terms:
            labels = set()
            for v, _ in m:
                b = blocks(v)
                if b is None:
                    if strict:
                        raise ValueError(f"variable {v} has no block")
                    continue
                labels.add(b)
            best = max(best, len(labels))
        return best

    def variables(self) -> set:
        return {v for m in self.terms for v, _ in m}

    def constant(self):
        return self.terms.get(ONE_MONO, 0)

    def is_constant(self) -> bool:
        return all(not m for m in self.terms)

    # ---------------------------------------------------------- transforms

    def substitute(self, mapping: Mapping) -> "Polynomial":
        """Replace variables by polynomials; unmapped variables stay."""
        out = Polynomial()
        cache = {}
        for m, c in self.terms.items():
            term = Polynomial._raw({ONE_MONO: c})
            keep = []
            for v, e in m:
                if v in mapping:
                    key = (v, e)
                    if key not in cache:
                        cache[key] = _as_poly(mapping[v]) ** e
                    term = term * cache[key]
                else:
                    keep.append((v, e))
            if keep:
                term = term.mul_monomial(tuple(keep))
            out = out + term
        return out

    def multilinearize(self) -> "Polynomial":
        out = {}
        for m, c in self.terms.items():
            mm = tuple((v, 1) for v, _ in m)
            out[mm] = out.get(mm, 0) + c
        return Polynomial(out)

    def evaluate(self, assignment: Mapping):
        total = 0
        for m, c in self.terms.items():
            t = c
            for v, e in m:
                t = t * assignment[v] ** e
            total += t
        return _norm(Fraction(total)) if isinstance(total, Fraction) else total

    def mod(self, p: int) -> "Polynomial":
        """Coefficients reduced into the prime field of size p."""
        out = {}
        for m, c in self.terms.items():
            c = Fraction(c)
            if c.denominator % p == 0:
                raise ValueError(f"coefficient {c} has no image modulo {p}")
            r = c.numerator * pow(c.denominator, -1, p) % p
            if r:
                out[m] = r
        return Polynomial._raw(out)

    # ---------------------------------------------------------- text

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda mc: (-mono_degree(mc[0]), mc[0]))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            c = Fraction(c)
            if not m:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono_str(m))
            elif c == -1:
                parts.append("-" + mono_str(m))
            else:
                parts.append(f"{c}*{mono_str(m)}")
        return " + ".join(parts)

    def __repr__(self):
        return f"Polynomial({self})"


def _as_poly(x) -> Polynomial:
    return x if isinstance(x, Polynomial) else Polynomial.const(x)


def parse_poly(text: str) -> Polynomial:
    text = text.strip()
    if text in ("", "0"):
        return Polynomial()
    out = Polynomial()
    for chunk in text.split("+"):
        chunk = chunk.strip()
        if not chunk:
            continue
        toks = chunk.split("*")
        try:
            c = Fraction(toks[0])
            toks = toks[1:]
        except ValueError:
            c = Fraction(1)
            if toks[0].startswith("-"):
                c, toks[0] = Fraction(-1), toks[0][1:]
        vs = []
        for t in toks:
            name, _, e = t.partition("^")
            vs += [parse_var(name)] * (int(e) if e else 1)
        out = out + Polynomial.monomial(vs, c)
    return out


# ---------------------------------------------------------------- blocks


def pigeon_blocks(v: VarId):
    """Block map sending q, z and x variables (and their twins) to their pigeon."""
    return pigeon_of(v)


def single_block(v: VarId):
    return 0


# ---------------------------------------------------------------- restriction


def value_of(v: VarId, rho: Mapping, convention: str = "ineq"):
    """Numeric value of v under rho, or None when unassigned.

    convention "ineq" reads true as 1, "pcr" reads true as 0.  A twin takes
    the complement of its base variable's value.
    """
    b = rho.get(v.base)
    if b is None:
        return None
    val = (1 if b else 0) if convention == "ineq" else (0 if b else 1)
    return 1 - val if v.twin else val


def restrict_poly(p: Polynomial, rho, convention: str = "ineq") -> Polynomial:
    rho = getattr(rho, "assignment", rho)
    out = {}
    for m, c in p.terms.items():
        keep = []
        for v, e in m:
            val = value_of(v, rho, convention)
            if val is None:
                keep.append((v, e))
            elif val == 0:
                c = 0
                break
        if c == 0:
            continue
        mm = tuple(keep)
        s = out.get(mm, 0) + c
        if s == 0:
            out.pop(mm, None)
        else:
            out[mm] = s
    return Polynomial._raw(out)


# ---------------------------------------------------------------- Moebius


def moebius(a: Mapping, X: Iterable, Y: Iterable):
    """Inclusion-exclusion sum over Y <= Z <= X of (-1)^|Z-Y| a(Z)."""
    X, Y = frozenset(X), frozenset(Y)
    if not Y <= X:
        raise ValueError("Y must be a subset of X")
    rest = sorted(X - Y)
    total = 0
    for r in range(len(rest) + 1):
        for extra in combinations(rest, r):
            Zs = Y | frozenset(extra)
            if Zs not in a:
                raise KeyError(f"functional undefined on {sorted(Zs)}")
            total += (-1) ** r * a[Zs]
    return _norm(Fraction(total)) if isinstance(total, Fraction) else total
