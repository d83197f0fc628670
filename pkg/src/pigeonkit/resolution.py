"""Resolution proofs: checking, measures, restriction, bounded saturation.

A proof is a sequence of steps.  ``Resolve(i, j, x)`` takes the clause of
step i, which must contain x, and the clause of step j, which must contain
not-x.  ``Weaken(i, target)`` replaces a clause by any superset.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

from .algebra import pigeon_blocks
from .formulas import (
    CnfFormula, Literal, P, Q, R, RR, VarId, Y, Z, as_assignment, clause,
    clause_str, gen_erphp, neg, parse_clause, parse_var, pos, restrict_clause,
    restrict_formula,
)


class ProofError(ValueError):
    def __init__(self, step: int, msg: str):
        super().__init__(f"step {step}: {msg}")
        self.step = step


class ResourceError(RuntimeError):
    pass


class Axiom(NamedTuple):
    index: int


class Resolve(NamedTuple):
    i: int
    j: int
    pivot: VarId


class Weaken(NamedTuple):
    i: int
    target: frozenset


@dataclass(frozen=True)
class ResolutionProof:
    steps: tuple

    def __len__(self):
        return len(self.steps)

    def to_text(self) -> str:
        lines = []
        for t, s in enumerate(self.steps):
            if isinstance(s, Axiom):
                lines.append(f"{t} axiom {s.index}")
            elif isinstance(s, Resolve):
                lines.append(f"{t} res {s.i} {s.j} {s.pivot.name}")
            else:
                lines.append(f"{t} weak {s.i} {clause_str(s.target)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ResolutionProof":
        steps = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split(None, 2)
            if int(parts[0]) != len(steps):
                raise ValueError(f"step numbers out of order at {line!r}")
            kind, rest = parts[1], parts[2] if len(parts) > 2 else ""
            if kind == "axiom":
                steps.append(Axiom(int(rest)))
            elif kind == "res":
                i, j, v = rest.split()
                steps.append(Resolve(int(i), int(j), parse_var(v)))
            elif kind == "weak":
                i, _, lits = rest.partition(" ")
                steps.append(Weaken(int(i), parse_clause(lits)))
            else:
                raise ValueError(f"unknown rule {kind!r}")
        return cls(tuple(steps))


@dataclass(frozen=True)
class ProofMetrics:
    size: int
    width: int
    clause_space: int
    pigeon_width: int
    tree_like: bool
    refutation: bool


def derive_clauses(proof: ResolutionProof, f: CnfFormula) -> list:
    """Recompute and check every step; returns the clause of each step."""
    out = []
    for t, s in enumerate(proof.steps):
        if isinstance(s, Axiom):
            if not 0 <= s.index < len(f.clauses):
                raise ProofError(t, f"axiom index {s.index} out of range")
            out.append(f.clauses[s.index])
            continue
        if not 0 <= s.i < t:
            raise ProofError(t, f"dangling reference {s.i}")
        if isinstance(s, Resolve):
            if not 0 <= s.j < t:
                raise ProofError(t, f"dangling reference {s.j}")
            a, b = out[s.i], out[s.j]
            if pos(s.pivot) not in a:
                raise ProofError(t, f"{s.pivot} does not occur positively in step {s.i}")
            if neg(s.pivot) not in b:
                raise ProofError(t, f"{s.pivot} does not occur negatively in step {s.j}")
            res = (a - {pos(s.pivot)}) | (b - {neg(s.pivot)})
            seen = {}
            for lit in res:
                if seen.setdefault(lit.var, lit.positive) != lit.positive:
                    raise ProofError(t, f"resolvent is tautological in {lit.var}")
            out.append(res)
        elif isinstance(s, Weaken):
            if not out[s.i] <= s.target:
                raise ProofError(t, "weakening target does not contain the premise")
            try:
                out.append(clause(s.target))
            except ValueError as e:
                raise ProofError(t, str(e)) from None
        else:
            raise ProofError(t, f"unknown step {s!r}")
    return out


def premises(s) -> tuple:
    if isinstance(s, Axiom):
        return ()
    if isinstance(s, Resolve):
        return (s.i, s.j)
    return (s.i,)


def clause_space(proof: ResolutionProof) -> int:
    """Max over t of #{i < t still needed at time t} + 1."""
    n = len(proof.steps)
    last = list(range(n))
    for t, s in enumerate(proof.steps):
        for i in premises(s):
            last[i] = max(last[i], t)
    # sweep: clause i is live on the interval (i, last[i]]
    delta = [0] * (n + 2)
    for i in range(n):
        if last[i] > i:
            delta[i + 1] += 1
            delta[last[i] + 1] -= 1
    best, live = 0, 0
    for t in range(n):
        live += delta[t]
        best = max(best, live + 1)
    return best


def clause_blocks(c, blocks: Callable = pigeon_blocks) -> set:
    out = set()
    for lit in c:
        b = blocks(lit.var)
        if b is not None:
            out.add(b)
    return out


def verify_resolution(proof: ResolutionProof, f: CnfFormula, blocks: Callable = pigeon_blocks,
                      require_refutation: bool = True) -> ProofMetrics:
    cls = derive_clauses(proof, f)
    is_ref = bool(cls) and not cls[-1]
    if require_refutation and not is_ref:
        raise ProofError(len(cls) - 1, "last clause is not empty")
    uses = [0] * len(cls)
    for s in proof.steps:
        for i in premises(s):
            uses[i] += 1
    return ProofMetrics(
        size=len(cls),
        width=max((len(c) for c in cls), default=0),
        clause_space=clause_space(proof),
        pigeon_width=max((len(clause_blocks(c, blocks)) for c in cls), default=0),
        tree_like=all(u <= 1 for u in uses),
        refutation=is_ref,
    )


class ProofBuilder:
    """Appends steps while tracking the derived clauses."""

    def __init__(self, f: CnfFormula):
        self.f = f
        self.steps = []
        self.clauses = []

    def axiom(self, c) -> int:
        c = frozenset(c)
        self.steps.append(Axiom(self.f.index_of(c)))
        self.clauses.append(c)
        return len(self.steps) - 1

    def resolve(self, i: int, j: int, x: VarId) -> int:
        a, b = self.clauses[i], self.clauses[j]
        assert pos(x) in a and neg(x) in b, (clause_str(a), clause_str(b), x)
        self.steps.append(Resolve(i, j, x))
        self.clauses.append((a - {pos(x)}) | (b - {neg(x)}))
        return len(self.steps) - 1

    def weaken(self, i: int, target) -> int:
        target = frozenset(target)
        if target == self.clauses[i]:
            return i
        self.steps.append(Weaken(i, target))
        self.clauses.append(target)
        return len(self.steps) - 1

    def proof(self) -> ResolutionProof:
        return ResolutionProof(tuple(self.steps))


# ---------------------------------------------------------------- the explicit ERPHP refutation


def erphp_refutation_size(k: int, n: int) -> int:
    """Exact step count of the pruned construction."""
    def p_leaf(width):
        return 1 + (width > 2)

    def q_leaf(width):
        return 7 + (width > 4)

    def q_node(e):
        return (3 * k - 4 + e * q_leaf(k + e + 1)
                + (k - 1 - e) * (q_node(e + 1) if e + 1 < k else 0))

    def p_node(d):
        child = p_node(d + 1) if d + 1 < k else q_node(0)
        return 3 * n - 5 + d * p_leaf(d + 1) + (n - d) * child

    return p_node(0)


def construct_erphp_refutation(k: int, n: int, prune: bool = True,
                               max_steps: int = 5_000_000) -> ResolutionProof:
    """Tree-like refutation of gen_erphp(k, n) of width 2k + 1.

    Every clause ``not p[1,v1] or ... or not p[k,vk] or not q[v1,w1] or ...``
    is derived by backward induction over the prefix tree of the sequences
    (v1..vk, w1..wk).  With ``prune`` a prefix that already repeats a v (or
    a w) is closed off immediately from the matching axioms; otherwise the
    whole tree is walked down to full-length sequences.
    """
    f = gen_erphp(k, n)
    if prune:
        est = erphp_refutation_size(k, n)
    else:
        est = 8 * math.perm(n, k) * (k - 1) ** k
    if est > max_steps:
        raise ResourceError(f"refutation would need about {est} steps (limit {max_steps})")
    b = ProofBuilder(f)

    def p_literals(vs):
        return [neg(P(u + 1, v)) for u, v in enumerate(vs)]

    def q_literals(vs, ws):
        return [neg(Q(vs[u], w)) for u, w in enumerate(ws)]

    def p_leaf(vs, A):
        for u2 in range(len(vs)):
            for u in range(u2):
                if vs[u] == vs[u2]:
                    i = b.axiom([neg(P(u + 1, vs[u])), neg(P(u2 + 1, vs[u]))])
                    return b.weaken(i, A)
        raise AssertionError("no repeated pigeon image")

    def q_leaf(vs, ws, A):
        for u2 in range(len(ws)):
            for u in range(u2):
                if ws[u] == ws[u2]:
                    a, c, w = vs[u], vs[u2], ws[u]
                    i1 = b.axiom([neg(P(u + 1, a)), pos(R(a))])
                    i2 = b.axiom([neg(R(a)), neg(R(c)), pos(RR(a, c))])
                    h = b.resolve(i1, i2, R(a))
                    i4 = b.axiom([neg(P(u2 + 1, c)), pos(R(c))])
                    h = b.resolve(i4, h, R(c))
                    i6 = b.axiom([neg(RR(a, c)), neg(Q(a, w)), neg(Q(c, w))])
                    h = b.resolve(h, i6, RR(a, c))
                    return b.weaken(h, A)
        raise AssertionError("no hole collision")

    def leaf(vs, ws):
        A = frozenset(p_literals(vs) + q_literals(vs, ws))
        if len(set(vs)) < len(vs):
            return p_leaf(vs, A)
        return q_leaf(vs, ws, A)

    def q_node(vs, ws):
        e = len(ws)
        if e == k:
            return leaf(vs, ws)
        if prune and len(set(ws)) < e:
            return leaf(vs, ws)
        ks = e + 1
        vstar = vs[ks - 1]

        def child(w):
            return q_node(vs, ws + [w])

        h = b.axiom([neg(P(ks, vstar)), pos(R(vstar))])
        a = b.axiom([neg(R(vstar)), pos(Q(vstar, 1)), pos(Z(vstar, 1))])
        h = b.resolve(h, a, R(vstar))
        h = b.resolve(h, child(1), Q(vstar, 1))
        for w in range(1, k - 3):
            a = b.axiom([neg(Z(vstar, w)), pos(Q(vstar, w + 1)), pos(Z(vstar, w + 1))])
            h = b.resolve(h, a, Z(vstar, w))
            h = b.resolve(h, child(w + 1), Q(vstar, w + 1))
        a = b.axiom([neg(Z(vstar, k - 3)), pos(Q(vstar, k - 2)), pos(Q(vstar, k - 1))])
        h = b.resolve(h, a, Z(vstar, k - 3))
        h = b.resolve(h, child(k - 2), Q(vstar, k - 2))
        return b.resolve(h, child(k - 1), Q(vstar, k - 1))

    def p_node(vs):
        d = len(vs)
        if len(set(vs)) < d:
            return p_leaf(vs, frozenset(p_literals(vs)))
        if d == k:
            return q_node(vs, [])
        ks = d + 1

        def child(v):
            return p_node(vs + [v])

        h = b.axiom([pos(P(ks, 1)), pos(P(ks, 2)), pos(Y(ks, 2))])
        h = b.resolve(h, child(1), P(ks, 1))
        h = b.resolve(h, child(2), P(ks, 2))
        for v in range(2, n - 2):
            a = b.axiom([neg(Y(ks, v)), pos(P(ks, v + 1)), pos(Y(ks, v + 1))])
            h = b.resolve(h, a, Y(ks, v))
            h = b.resolve(h, child(v + 1), P(ks, v + 1))
        a = b.axiom([neg(Y(ks, n - 2)), pos(P(ks, n - 1)), pos(P(ks, n))])
        h = b.resolve(h, a, Y(ks, n - 2))
        h = b.resolve(h, child(n - 1), P(ks, n - 1))
        return b.resolve(h, child(n), P(ks, n))

    p_node([])
    return b.proof()


# ---------------------------------------------------------------- restriction and renaming


def restrict_resolution(proof: ResolutionProof, f: CnfFormula, rho, clauses: list | None = None) -> tuple:
    """Restrict a refutation of f; returns (restricted formula, proof).

    Each surviving step derives a subclause of its original clause under
    rho.  Steps whose rule collapses are replaced by one of their premises,
    and steps no longer needed for the final clause are dropped, so size,
    width and clause space never grow.  Pass ``clauses`` (from
    derive_clauses) when restricting the same proof many times.
    """
    rho = as_assignment(rho)
    g = restrict_formula(f, rho)
    orig = clauses if clauses is not None else derive_clauses(proof, f)
    rep = [None] * len(orig)   # index into ``new`` or None when satisfied
    new, newcls = [], []

    def emit(step, c):
        new.append(step)
        newcls.append(c)
        return len(new) - 1

    for t, s in enumerate(proof.steps):
        if restrict_clause(orig[t], rho) is None:
            continue
        if isinstance(s, Axiom):
            c = restrict_clause(orig[t], rho)
            rep[t] = emit(Axiom(g.index_of(c)), c)
        elif isinstance(s, Weaken):
            rep[t] = rep[s.i]
        else:
            x = s.pivot
            val = rho.get(x)
            if val is True:
                rep[t] = rep[s.j]
            elif val is False:
                rep[t] = rep[s.i]
            else:
                a, b = rep[s.i], rep[s.j]
                if pos(x) not in newcls[a]:
                    rep[t] = a
                elif neg(x) not in newcls[b]:
                    rep[t] = b
                else:
                    c = (newcls[a] - {pos(x)}) | (newcls[b] - {neg(x)})
                    rep[t] = emit(Resolve(a, b, x), c)
        assert rep[t] is not None
    final = rep[-1]
    # keep only what the final step depends on
    keep, stack = set(), [final]
    while stack:
        t = stack.pop()
        if t in keep:
            continue
        keep.add(t)
        stack.extend(premises(new[t]))
    order = sorted(keep)
    renum = {t: i for i, t in enumerate(order)}
    out = []
    for t in order:
        s = new[t]
        if isinstance(s, Resolve):
            s = Resolve(renum[s.i], renum[s.j], s.pivot)
        out.append(s)
    return g, ResolutionProof(tuple(out))


def rename_proof(proof: ResolutionProof, src: CnfFormula, target: CnfFormula,
                 rename: Callable) -> ResolutionProof:
    """Apply a variable renaming; axioms are looked up in ``target``."""
    cls = derive_clauses(proof, src)
    out = []
    for t, s in enumerate(proof.steps):
        if isinstance(s, Axiom):
            c = frozenset(Literal(rename(l.var), l.positive) for l in cls[t])
            out.append(Axiom(target.index_of(c)))
        elif isinstance(s, Resolve):
            out.append(Resolve(s.i, s.j, rename(s.pivot)))
        else:
            out.append(Weaken(s.i, frozenset(Literal(rename(l.var), l.positive) for l in s.target)))
    return ResolutionProof(tuple(out))


# ---------------------------------------------------------------- bounded saturation


@dataclass
class SaturationResult:
    refutable: bool
    derived: int
    proof: ResolutionProof | None = None


def saturate_bounded(f: CnfFormula, width: int | None = None, pigeon_width: int | None = None,
                     blocks: Callable = pigeon_blocks, subsumption: bool = False,
                     want_proof: bool = False, max_clauses: int = 5_000_000) -> SaturationResult:
    """Is the empty clause derivable when every derived clause stays within
    the bound?  Axioms are always available, whatever their size.

    Weakening never has to be applied explicitly: any bounded derivation
    with weakening can be turned into a resolution derivation of subclauses,
    and subclauses stay within both kinds of bound.
    """
    vs = f.variables()
    nv = len(vs)
    bit = {v: i for i, v in enumerate(vs)}
    labels = sorted({blocks(v) for v in vs} - {None})
    lab = {b: i for i, b in enumerate(labels)}
    vblock = [(1 << lab[blocks(v)]) if blocks(v) is not None else 0 for v in vs]

    def block_mask(m):
        out = 0
        while m:
            low = m & -m
            out |= vblock[low.bit_length() - 1]
            m ^= low
        return out

    def ok(p, n):
        if width is not None and (p | n).bit_count() > width:
            return False
        if pigeon_width is not None and block_mask(p | n).bit_count() > pigeon_width:
            return False
        return True

    origin = {}
    heap, seq = [], 0
    for i, c in enumerate(f.clauses):
        p = sum(1 << bit[l.var] for l in c if l.positive)
        n = sum(1 << bit[l.var] for l in c if not l.positive)
        if (p, n) in origin:
            continue
        origin[(p, n)] = ("axiom", i)
        heapq.heappush(heap, ((p | n).bit_count(), seq, p, n))
        seq += 1
    found = (0, 0) in origin
    by_lit = [[] for _ in range(2 * nv)]  # 2*b: positive occurrence, 2*b+1: negative
    # processed clauses filed under their smallest literal code: a clause
    # subsuming (p, n) sits in the list of one of the literals of (p, n)
    by_first = [[] for _ in range(2 * nv)]

    def first_code(p, n):
        cp = 2 * ((p & -p).bit_length() - 1) if p else 2 * nv
        cn = 2 * ((n & -n).bit_length() - 1) + 1 if n else 2 * nv
        return min(cp, cn)

    def subsumed(p, n):
        for side, mask in ((0, p), (1, n)):
            m = mask
            while m:
                low = m & -m
                m ^= low
                for p2, n2 in by_first[2 * (low.bit_length() - 1) + side]:
                    if (p2 & ~p) == 0 and (n2 & ~n) == 0:
                        return True
        return False

    while heap and not found:
        _, _, p, n = heapq.heappop(heap)
        if subsumption and subsumed(p, n):
            continue
        for side, mask in ((0, p), (1, n)):
            m = mask
            while m and not found:
                low = m & -m
                m ^= low
                b = low.bit_length() - 1
                for p2, n2 in by_lit[2 * b + 1 - side]:
                    rp = (p | p2) & ~low
                    rn = (n | n2) & ~low
                    if rp & rn or (rp, rn) in origin or not ok(rp, rn):
                        continue
                    if subsumption and subsumed(rp, rn):
                        continue
                    if side == 0:
                        origin[(rp, rn)] = ("res", (p, n), (p2, n2), b)
                    else:
                        origin[(rp, rn)] = ("res", (p2, n2), (p, n), b)
                    if not (rp or rn):
                        found = True
                        break
                    heapq.heappush(heap, ((rp | rn).bit_count(), seq, rp, rn))
                    seq += 1
                    if len(origin) > max_clauses:
                        raise ResourceError(f"saturation exceeded {max_clauses} clauses")
        if p or n:
            by_first[first_code(p, n)].append((p, n))
        m = p
        while m:
            low = m & -m
            m ^= low
            by_lit[2 * (low.bit_length() - 1)].append((p, n))
        m = n
        while m:
            low = m & -m
            m ^= low
            by_lit[2 * (low.bit_length() - 1) + 1].append((p, n))

    proof = None
    if found and want_proof:
        proof = _extract_proof(origin, vs)
    return SaturationResult(found, len(origin), proof)


def _extract_proof(origin: dict, vs: list) -> ResolutionProof:
    steps, index = [], {}
    stack = [((0, 0), False)]
    while stack:
        key, expanded = stack.pop()
        if key in index:
            continue
        o = origin[key]
        if o[0] == "axiom":
            index[key] = len(steps)
            steps.append(Axiom(o[1]))
        elif expanded:
            index[key] = len(steps)
            steps.append(Resolve(index[o[1]], index[o[2]], vs[o[3]]))
        else:
            stack.append((key, True))
            stack.append((o[2], False))
            stack.append((o[1], False))
    return ResolutionProof(tuple(steps))


# ---------------------------------------------------------------- prosecutor and defendant


def prosecutor_game(proof: ResolutionProof, f: CnfFormula, blocks: Callable = pigeon_blocks,
                    holes: int | None = None) -> int:
    """Walk the refutation from the empty clause towards an axiom.

    The current clause is the record; it is falsified by the answers given
    so far.  At a resolution step the defendant answers the pivot, which
    picks the premise that stays falsified.  For pigeon variables (q and z)
    the defendant keeps a partial matching of the pigeons on record into
    the holes; all other variables are answered false.  Returns the largest
    number of blocks mentioned by the record together with the pivot.
    """
    cls = derive_clauses(proof, f)
    if cls[-1]:
        raise ProofError(len(cls) - 1, "not a refutation")
    if holes is None:
        holes = (f.k - 1) if f.k else 0
    match = {}
    t = len(cls) - 1
    best = 0

    def on_record(c):
        return clause_blocks(c, blocks)

    def value(x: VarId, c) -> bool:
        v = pigeon_of_var(x)
        if v is None or x.kind not in ("q", "z"):
            return False
        if v not in match:
            used = set(match.values())
            lits = [l for l in c if l.var.kind in ("q", "z") and l.var.idx[0] == v]
            for h in range(1, holes + 1):
                if h in used:
                    continue
                if all(_pigeon_value(l.var, h) != l.positive for l in lits):
                    match[v] = h
                    break
            else:
                return False
        return _pigeon_value(x, match[v])

    while True:
        c = cls[t]
        rec = on_record(c)
        for v in list(match):
            if v not in rec:
                del match[v]
        s = proof.steps[t]
        if isinstance(s, Axiom):
            best = max(best, len(rec))
            return best
        if isinstance(s, Weaken):
            best = max(best, len(rec))
            t = s.i
            continue
        b = blocks(s.pivot)
        best = max(best, len(rec | ({b} if b is not None else set())))
        t = s.j if value(s.pivot, c) else s.i


def pigeon_of_var(v: VarId):
    return v.idx[0] if v.kind in ("q", "z") else None


def _pigeon_value(x: VarId, hole: int) -> bool:
    w = x.idx[1]
    return hole == w if x.kind == "q" else hole > w
