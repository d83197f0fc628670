"""Random restrictions that collapse the relativized formula to the plain
3-CNF pigeonhole formula, and a Monte Carlo check of how often a clause
keeps many pigeons alive."""
from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .formulas import (
    CnfFormula, clause_str, gen_erphp, gen_tphp, parse_var, pigeon_of, rename_pigeons,
)


@dataclass
class Restriction:
    assignment: dict = field(default_factory=dict)   # VarId (never a twin) -> bool
    pigeons: tuple = ()
    seed: int | None = None

    def __post_init__(self):
        for v in self.assignment:
            if v.twin:
                raise ValueError(f"restrictions assign base variables only, got {v}")

    def get(self, v, default=None):
        return self.assignment.get(v, default)

    def to_text(self) -> str:
        lines = ["pigeons {" + " ".join(map(str, self.pigeons)) + "}"]
        if self.seed is not None:
            lines.append(f"seed {self.seed}")
        for v in sorted(self.assignment):
            lines.append(f"set {v.name} {int(self.assignment[v])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Restriction":
        asg, pigeons, seed = {}, (), None
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("pigeons"):
                inner = line[len("pigeons"):].strip().strip("{}")
                pigeons = tuple(int(t) for t in inner.split())
            elif line.startswith("seed"):
                seed = int(line.split()[1])
            elif line.startswith("set"):
                _, name, val = line.split()
                if val not in ("0", "1"):
                    raise ValueError(f"bad value in {line!r}")
                asg[parse_var(name)] = val == "1"
            else:
                raise ValueError(f"unexpected line {line!r}")
        return cls(asg, pigeons, seed)


def pigeon_targets(pigeons) -> dict:
    """Pigeon u of the small formula goes to the u-th smallest chosen pigeon."""
    return {u: v for u, v in enumerate(sorted(pigeons), start=1)}


def restriction_for(k: int, n: int, pigeons, bits: dict) -> Restriction:
    """The restriction determined by the chosen pigeons and one bit per
    unchosen pigeon (shared by all its q and z variables)."""
    chosen = set(pigeons)
    target = pigeon_targets(pigeons)
    asg = {}
    for v in gen_erphp(k, n).variables():
        kind, idx = v.kind, v.idx
        if kind == "r":
            asg[v] = idx[0] in chosen
        elif kind == "rr":
            asg[v] = idx[0] in chosen and idx[1] in chosen
        elif kind == "p":
            asg[v] = target[idx[0]] == idx[1]
        elif kind == "y":
            asg[v] = idx[1] < target[idx[0]]
        elif kind in ("q", "z") and idx[0] not in chosen:
            asg[v] = bits[idx[0]]
    return Restriction(asg, tuple(sorted(pigeons)))


def sample_d(k: int, n: int, seed: int) -> Restriction:
    if k > n:
        raise ValueError("need k <= n")
    rng = random.Random(seed)
    pigeons = sorted(rng.sample(range(1, n + 1), k))
    bits = {v: rng.random() < 0.5 for v in range(1, n + 1) if v not in pigeons}
    rho = restriction_for(k, n, pigeons, bits)
    rho.seed = seed
    return rho


class RenamingError(ValueError):
    def __init__(self, missing, extra):
        self.missing, self.extra = missing, extra
        lines = ["restricted formula does not match the pigeonhole formula"]
        lines += [f"  - {clause_str(c)}" for c in missing[:20]]
        lines += [f"  + {clause_str(c)}" for c in extra[:20]]
        super().__init__("\n".join(lines))


def surviving_pigeons(f: CnfFormula) -> list:
    return sorted({pigeon_of(l.var) for c in f.clauses for l in c} - {None})


def check_renaming(g: CnfFormula, k: int) -> dict:
    """Map the surviving pigeons, in order, onto 1..k and compare with gen_tphp(k)."""
    alive = surviving_pigeons(g)
    mapping = {v: u for u, v in enumerate(alive, start=1)}
    renamed = set()
    for c in g.clauses:
        renamed.add(frozenset(l._replace(var=rename_pigeons(l.var, mapping)) for l in c))
    want = set(gen_tphp(k).clauses)
    missing = sorted(want - renamed, key=clause_str)
    extra = sorted(renamed - want, key=clause_str)
    if missing or extra or len(alive) != k:
        raise RenamingError(missing, extra)
    return mapping


# ---------------------------------------------------------------- survival


def analytic_bound(k: int, n: int, ell: int) -> float:
    # Two cases: more than 2k log n pigeons mentioned and the clause survives
    # with probability < 1/n^k; otherwise at least ell of the r <= 2k log n
    # mentioned pigeons land in the chosen set, a union bound over the
    # intersections giving k (2k log n)^k / (n-k)^ell.  log is base 2.
    lg = math.log2(n)
    return 1 / n ** k + k * (2 * k * lg) ** k / (n - k) ** ell


def bound_in_range(k: int, n: int, ell: int) -> bool:
    return n >= 16 and ell <= k <= n / (4 * math.log2(n))


@dataclass
class SurvivalEstimate:
    trials: int
    hits: int
    estimate: float
    bound: float
    stderr: float
    in_range: bool

    def csv_header(self) -> str:
        return "trials,hits,estimate,bound,stderr,in_range"

    def csv_row(self) -> str:
        return f"{self.trials},{self.hits},{self.estimate:.6g},{self.bound:.6g},{self.stderr:.3g},{int(self.in_range)}"


def _lit_values(lit, in_s, vu, bits):
    """(assigned mask, value) arrays for one literal over a batch of trials."""
    v, t = lit.var.base, lit.var.kind
    trials = in_s.shape[0]
    full = np.ones(trials, dtype=bool)
    if t == "r":
        val = in_s[:, v.idx[0]]
    elif t == "rr":
        val = in_s[:, v.idx[0]] & in_s[:, v.idx[1]]
    elif t == "p":
        val = vu[:, v.idx[0] - 1] == v.idx[1]
    elif t == "y":
        val = v.idx[1] < vu[:, v.idx[0] - 1]
    elif t in ("q", "z"):
        return ~in_s[:, v.idx[0]], bits[:, v.idx[0]]
    else:
        raise ValueError(f"variable {v} is not a variable of the relativized formula")
    return full, val


def _survival_batch(lits, kind, k, n, ell, trials, seed_seq):
    rng = np.random.default_rng(seed_seq)
    chosen = np.sort(np.argsort(rng.random((trials, n)), axis=1)[:, :k] + 1, axis=1)
    in_s = np.zeros((trials, n + 1), dtype=bool)
    np.put_along_axis(in_s, chosen, True, axis=1)
    bits = rng.integers(0, 2, size=(trials, n + 1)).astype(bool)
    removed = np.zeros(trials, dtype=bool)
    for lit in lits:
        assigned, val = _lit_values(lit, in_s, chosen, bits)
        # a twin reads the complement of its base variable
        truth = val ^ lit.var.twin
        agrees = assigned & (truth == lit.positive)
        disagrees = assigned & (truth != lit.positive)
        removed |= agrees if kind == "clause" else disagrees
    mentioned = sorted({pigeon_of(l.var) for l in lits} - {None})
    width = np.zeros(trials, dtype=np.int64)
    for v in mentioned:
        width += in_s[:, v]
    return int(np.count_nonzero(~removed & (width >= ell)))


def monte_carlo_survival(a, k: int, n: int, ell: int, trials: int, seed: int,
                         kind: str = "clause", jobs: int = 1, batch: int = 20_000) -> SurvivalEstimate:
    """Estimate Pr[the restricted clause (or term) still mentions >= ell pigeons]."""
    if trials <= 0:
        raise ValueError("need at least one trial")
    if kind not in ("clause", "term"):
        raise ValueError("kind is 'clause' or 'term'")
    lits = sorted(a)
    sizes = [batch] * (trials // batch) + ([trials % batch] if trials % batch else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    args = [(lits, kind, k, n, ell, s, ss) for s, ss in zip(sizes, seeds)]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            hits = sum(ex.map(lambda a: _survival_batch(*a), args))
    else:
        hits = sum(_survival_batch(*a) for a in args)
    est = hits / trials
    se = math.sqrt(max(est * (1 - est), 1 / trials) / trials)
    return SurvivalEstimate(trials, hits, est, analytic_bound(k, n, ell), se, bound_in_range(k, n, ell))


def exact_single_pigeon_survival(k: int, n: int) -> float:
    """A lone q-literal keeps its pigeon exactly when the pigeon is chosen."""
    return k / n
