"""Command-line entry point.

Exit codes: 0 success, 1 a proof or certificate failed to verify (or a
search found nothing), 2 usage or resource errors.  Errors are also written
to stderr as one JSON object per line.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import consistency as cons
from . import formulas as fm
from . import pcr
from . import resolution as res
from . import restrictions as rst
from . import semialgebraic as sa

FAMILIES = ("php", "tphp", "rphp", "erphp", "aphp")
PROOF_KINDS = ("res", "pcr", "sa", "sar", "las")


class UsageError(Exception):
    pass


class Failure(Exception):
    """Verification failed or nothing was found."""


# ---------------------------------------------------------------- io helpers


def _read(path) -> str:
    return Path(path).read_text()


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _is_system(text: str) -> bool:
    for line in text.splitlines():
        s = line.strip()
        if s and not s.startswith("#"):
            return s.startswith("system")
    return False


def load_input(path):
    """A CNF (DIMACS) or a polynomial system file."""
    text = _read(path)
    if _is_system(text):
        return pcr.system_from_text(text)
    return fm.import_dimacs(text)


def _need_cnf(obj, what: str) -> fm.CnfFormula:
    if not isinstance(obj, fm.CnfFormula):
        raise UsageError(f"{what} needs a CNF file")
    return obj


def system_for(obj, kind: str):
    if isinstance(obj, fm.PolynomialSystem):
        return obj
    return fm.pcr_system(obj) if kind == "pcr" else fm.s_system(obj)


def load_proof(kind: str, text: str):
    if kind == "res":
        return res.ResolutionProof.from_text(text)
    if kind == "pcr":
        return pcr.PcrProof.from_text(text)
    return sa.Certificate.from_text(text)


def emit(args, record: dict):
    if args.format == "json-lines":
        for k, v in record.items():
            print(json.dumps({"key": k, "value": v}))
    else:
        for k, v in record.items():
            print(f"{k}: {v}")


def _metrics_dict(m) -> dict:
    return {k: getattr(m, k) for k in m.__dataclass_fields__}


def _family_formula(name: str, k: int, n: int | None):
    if name == "php":
        return fm.gen_php(k)
    if name == "tphp":
        return fm.gen_tphp(k)
    if name == "rphp":
        return fm.gen_rphp(k, _req(n, "-n"))
    if name == "erphp":
        return fm.gen_erphp(k, _req(n, "-n"))
    raise UsageError(f"unknown family {name}")


def _req(v, flag):
    if v is None:
        raise UsageError(f"missing {flag}")
    return v


# ---------------------------------------------------------------- verbs


def cmd_gen(args):
    if args.family == "aphp":
        text = pcr.system_to_text(fm.gen_aphp(args.k))
    else:
        f = _family_formula(args.family, args.k, args.n)
        if args.encoding == "cnf":
            text = fm.export_dimacs(f)
        elif args.encoding == "pcr":
            text = pcr.system_to_text(fm.pcr_system(f))
        else:
            text = pcr.system_to_text(fm.s_system(f))
    _write(args.output, text)
    return 0


def _resolution_refutation(args):
    if args.erphp:
        k, n = _req(args.k, "-k"), _req(args.n, "-n")
        est = res.erphp_refutation_size(k, n)
        if est > args.max_steps:
            raise res.ResourceError(f"construction needs {est} steps (limit {args.max_steps})")
        return fm.gen_erphp(k, n), res.construct_erphp_refutation(k, n, max_steps=args.max_steps)
    f = _need_cnf(load_input(_req(args.formula, "--formula or a construction flag")), "search")
    r = res.saturate_bounded(f, args.width, args.pigeon_width, subsumption=args.subsumption,
                             want_proof=True, max_clauses=args.max_steps)
    if not r.refutable:
        raise Failure("no refutation within the given bounds")
    return f, r.proof


def cmd_refute(args):
    kind = args.system
    if kind == "las":
        k = _req(args.k, "-k")
        if args.php:
            c = sa.lasserre_php(k)
        elif args.rphp:
            c = sa.lasserre_rphp(k, _req(args.n, "-n"), args.max_terms)
        elif args.erphp:
            c = sa.lasserre_erphp(k, _req(args.n, "-n"), args.max_terms)
        else:
            raise UsageError("las needs one of --php, --rphp, --erphp")
        _write(args.output, c.to_text())
        return 0
    if args.php or args.rphp:
        raise UsageError("--php/--rphp constructions are Lasserre certificates (use las)")
    f, proof = _resolution_refutation(args)
    if kind == "res":
        out = proof.to_text()
    elif kind == "pcr":
        out = pcr.simulate_resolution_pcr(proof, f).to_text()
    else:
        out = sa.simulate_resolution_sar(proof, f, kind.upper()).to_text()
    _write(args.output, out)
    return 0


def cmd_simulate(args):
    f = _need_cnf(load_input(args.formula), "simulate")
    proof = res.ResolutionProof.from_text(_read(args.proof))
    res.verify_resolution(proof, f)
    if args.target == "pcr":
        out = pcr.simulate_resolution_pcr(proof, f).to_text()
    else:
        out = sa.simulate_resolution_sar(proof, f, args.target.upper()).to_text()
    _write(args.output, out)
    return 0


def _check(kind, obj, proof, require_refutation=True):
    if kind == "res":
        return res.verify_resolution(proof, _need_cnf(obj, "res"), require_refutation=require_refutation)
    if kind == "pcr":
        return pcr.verify_pcr(proof, system_for(obj, "pcr"))
    flavor = {"sa": "SA", "sar": "SAR", "las": "LAS"}[kind]
    if proof.flavor != flavor:
        raise sa.CertificateError(f"file holds a {proof.flavor} certificate, expected {flavor}")
    return sa.verify_certificate(proof, system_for(obj, kind))


def cmd_verify(args):
    obj = load_input(args.formula)
    proof = load_proof(args.kind, _read(args.proof))
    m = _check(args.kind, obj, proof)
    if not getattr(m, "refutation", True):
        raise Failure("valid derivation but not a refutation")
    emit(args, {"status": "valid", **_metrics_dict(m)})
    return 0


def cmd_measure(args):
    obj = load_input(args.formula)
    proof = load_proof(args.kind, _read(args.proof))
    m = _check(args.kind, obj, proof, require_refutation=False)
    emit(args, _metrics_dict(m))
    return 0


def cmd_restrict(args):
    if args.rho:
        rho = rst.Restriction.from_text(_read(args.rho))
    else:
        if args.seed is None:
            raise UsageError("sampling a restriction needs --seed (or pass --rho)")
        rho = rst.sample_d(_req(args.k, "-k"), _req(args.n, "-n"), args.seed)
    if args.save_rho:
        _write(args.save_rho, rho.to_text())
    obj = load_input(args.formula)
    if args.proof is None:
        if isinstance(obj, fm.CnfFormula):
            _write(args.output, fm.export_dimacs(fm.restrict_formula(obj, rho)))
        else:
            _write(args.output, pcr.system_to_text(sa.restrict_system(obj, rho)))
        return 0
    kind = _req(args.kind, "--kind")
    proof = load_proof(kind, _read(args.proof))
    if kind == "res":
        g, p2 = res.restrict_resolution(proof, _need_cnf(obj, "res"), rho)
        ftext = fm.export_dimacs(g)
    elif kind == "pcr":
        g, p2 = pcr.restrict_pcr(proof, system_for(obj, "pcr"), rho)
        ftext = pcr.system_to_text(g)
    else:
        g, p2 = sa.restrict_certificate(proof, system_for(obj, kind), rho)
        ftext = pcr.system_to_text(g)
    _write(args.output, ftext)
    _write(_req(args.proof_out, "--proof-out"), p2.to_text())
    return 0


def cmd_search(args):
    f = _need_cnf(load_input(args.formula), "search")
    r = res.saturate_bounded(f, args.width, args.pigeon_width, subsumption=args.subsumption,
                             want_proof=args.output is not None, max_clauses=args.max_steps)
    emit(args, {"refutable": r.refutable, "derived": r.derived})
    if r.refutable and args.output:
        _write(args.output, r.proof.to_text())
    return 0 if r.refutable else 1


def cmd_rank(args):
    f = _need_cnf(load_input(args.formula), "rank")
    out = cons.decide_sa_rank(f, args.k, budget=args.max_terms)
    if isinstance(out, cons.Refutation):
        emit(args, {"result": "refutation"})
        if args.output:
            _write(args.output, out.certificate.to_text())
    else:
        emit(args, {"result": "family"})
        if args.output:
            _write(args.output, out.family.to_text())
    return 0


def cmd_sample(args):
    if args.seed is None:
        raise UsageError("sample needs --seed")
    _write(args.output, rst.sample_d(args.k, args.n, args.seed).to_text())
    return 0


def cmd_montecarlo(args):
    if args.seed is None:
        raise UsageError("montecarlo needs --seed")
    a = fm.parse_clause(args.clause)
    est = rst.monte_carlo_survival(a, args.k, args.n, args.ell, args.trials, args.seed,
                                   kind=args.kind, jobs=args.jobs)
    print(est.csv_header())
    print(est.csv_row())
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json-lines"), default="text")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--max-steps", type=int, default=5_000_000)
    common.add_argument("--max-terms", type=int, default=4_000_000)
    common.add_argument("--seed", type=int)

    p = argparse.ArgumentParser(prog="pigeonkit", description="pigeonhole proof complexity toolkit")
    sub = p.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a formula or polynomial system")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("-k", type=int, required=True)
    g.add_argument("-n", type=int)
    g.add_argument("--encoding", choices=("cnf", "pcr", "s"), default="cnf")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("refute", parents=[common], help="construct or search for a refutation")
    r.add_argument("system", choices=PROOF_KINDS)
    r.add_argument("--erphp", action="store_true")
    r.add_argument("--rphp", action="store_true")
    r.add_argument("--php", action="store_true")
    r.add_argument("--formula")
    r.add_argument("-k", type=int)
    r.add_argument("-n", type=int)
    r.add_argument("--width", type=int)
    r.add_argument("--pigeon-width", type=int)
    r.add_argument("--subsumption", action="store_true")
    r.add_argument("-o", "--output")
    r.set_defaults(func=cmd_refute)

    s = sub.add_parser("simulate", parents=[common], help="convert a resolution refutation")
    s.add_argument("target", choices=("pcr", "sa", "sar"))
    s.add_argument("formula")
    s.add_argument("proof")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_simulate)

    for name, fn, helptext in (("verify", cmd_verify, "check a refutation and print its measures"),
                               ("measure", cmd_measure, "print the measures of a derivation")):
        v = sub.add_parser(name, parents=[common], help=helptext)
        v.add_argument("kind", choices=PROOF_KINDS)
        v.add_argument("formula")
        v.add_argument("proof")
        v.set_defaults(func=fn)

    x = sub.add_parser("restrict", parents=[common], help="apply a restriction")
    x.add_argument("--formula", required=True)
    x.add_argument("--proof")
    x.add_argument("--kind", choices=PROOF_KINDS)
    x.add_argument("--rho")
    x.add_argument("-k", type=int)
    x.add_argument("-n", type=int)
    x.add_argument("--save-rho")
    x.add_argument("-o", "--output")
    x.add_argument("--proof-out")
    x.set_defaults(func=cmd_restrict)

    b = sub.add_parser("search", parents=[common], help="bounded-width saturation")
    b.add_argument("--formula", required=True)
    b.add_argument("--width", type=int)
    b.add_argument("--pigeon-width", type=int)
    b.add_argument("--subsumption", action="store_true")
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_search)

    k = sub.add_parser("rank", parents=[common], help="decide Sherali-Adams rank k")
    k.add_argument("--formula", required=True)
    k.add_argument("-k", type=int, required=True)
    k.add_argument("-o", "--output")
    k.set_defaults(func=cmd_rank)

    m = sub.add_parser("sample", parents=[common], help="sample a restriction")
    m.add_argument("-k", type=int, required=True)
    m.add_argument("-n", type=int, required=True)
    m.add_argument("-o", "--output")
    m.set_defaults(func=cmd_sample)

    c = sub.add_parser("montecarlo", parents=[common], help="estimate pigeon survival")
    c.add_argument("--clause", required=True, help='literals, e.g. "q[1,1] -z[2,1]"')
    c.add_argument("--kind", choices=("clause", "term"), default="clause")
    c.add_argument("-k", type=int, required=True)
    c.add_argument("-n", type=int, required=True)
    c.add_argument("--ell", type=int, required=True)
    c.add_argument("--trials", type=int, default=100_000)
    c.set_defaults(func=cmd_montecarlo)
    return p


def _report(kind: str, err: Exception):
    sys.stderr.write(json.dumps({"error": kind, "message": str(err)}) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (res.ProofError, pcr.PcrError, sa.CertificateError, rst.RenamingError, Failure) as e:
        _report("verification", e)
        return 1
    except (UsageError, fm.ParameterError, res.ResourceError, cons.BudgetError,
            FileNotFoundError, ValueError, KeyError) as e:
        _report("usage", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
