"""Command-line front end: ``dcf factor | verify | sweep | stats``.

Results go to stdout as JSON (or CSV with ``--format csv``); a short human
summary goes to stderr.  Exit status: 0 when every verdict is pass or
not-applicable, 1 when a fail or borderline verdict was produced, 2 on usage
or i/o errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import checks as ck
from .factor import (
    DRange, dsearch_representations, lambda_representations, oracle_representations,
)
from .harness import Pairing, SweepConfig, config_dict, records_to_csv, sweep
from .numeric import ALL_CASES, Case, Outcome, Representation
from .primes import DIGITS, LimitExceeded, is_prime, max_limit, transition_matrix, \
    transition_matrix_upto

#: how many counterexamples / evaluated Th2 pairs are echoed on stdout
REPORT_SAMPLE = 100
#: above this p the per-p d-scan is replaced by the discriminant identity in `verify`
VERIFY_DSCAN_MAX = 10**7


class UsageError(Exception):
    pass


def _natural(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative: {value}")
    if value > max_limit():
        raise argparse.ArgumentTypeError(f"{value} exceeds maximum {max_limit()} (DCF_MAX_LIMIT)")
    return value


def _positive(text: str) -> int:
    value = _natural(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _cases(text: str) -> tuple:
    if text == "all":
        return ALL_CASES
    try:
        return tuple(Case.parse(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _claims(text: str) -> tuple:
    if text == "all":
        return tuple(ck.Claim)
    out = []
    for name in text.split(","):
        if name not in ck.CLAIM_GROUPS:
            raise argparse.ArgumentTypeError(
                f"unknown claim {name!r}; choose from {', '.join(ck.CLAIM_GROUPS)}")
        out.extend(ck.CLAIM_GROUPS[name])
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("factor", help="digit-class representations of p")
    f.add_argument("p", type=_natural)
    f.add_argument("--case", type=_cases, default=ALL_CASES, help="73|99|11|all")
    f.add_argument("--method", choices=("oracle", "dsearch", "lambda", "all"), default="all")
    f.add_argument("--dsearch-range", choices=("paper", "sound"), default="sound")
    f.add_argument("--format", choices=("json", "csv"), default="json")

    v = sub.add_parser("verify", help="run one claim on every representation of p")
    v.add_argument("p", type=_natural)
    v.add_argument("--claim", required=True, choices=tuple(ck.CLAIM_GROUPS))
    v.add_argument("--case", type=_cases, default=ALL_CASES)
    v.add_argument("--th2-pairing", choices=("literal", "consecutive"), default="literal")
    v.add_argument("--th2-gate", choices=("both", "p"), default="both")
    v.add_argument("--th2-use-gap", action="store_true")
    v.add_argument("--dsearch-range", choices=("paper", "sound"), default="sound")
    v.add_argument("--format", choices=("json", "csv"), default="json")

    s = sub.add_parser("sweep", help="range campaign over p = 1 (mod 10)")
    s.add_argument("--from", dest="lo", type=_natural, required=True)
    s.add_argument("--to", dest="hi", type=_natural, required=True)
    s.add_argument("--claims", type=_claims, default=tuple(ck.Claim))
    s.add_argument("--case", type=_cases, default=ALL_CASES)
    s.add_argument("--jobs", type=_positive, default=1)
    s.add_argument("--out", default=None, help="record file (JSONL, or CSV with --format csv)")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--records", choices=("all", "failures"), default="all")
    s.add_argument("--dsearch-range", choices=("paper", "sound"), default="sound")
    s.add_argument("--th2-pairing", choices=("literal", "consecutive"), default="literal")
    s.add_argument("--th2-gate", choices=("both", "p"), default="both")
    s.add_argument("--th2-use-gap", action="store_true")
    s.add_argument("--no-equivalence", action="store_true")
    s.add_argument("--chunk-size", type=_positive, default=10_000)

    t = sub.add_parser("stats", help="last-digit transitions of consecutive primes")
    t.add_argument("--transition", action="store_true", required=True)
    g = t.add_mutually_exclusive_group(required=True)
    g.add_argument("--primes", type=_natural, help="use the first N primes above 5")
    g.add_argument("--limit", type=_natural, help="use all primes in (5, L]")
    t.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


# -- factor -----------------------------------------------------------------

def _require_one(p: int) -> None:
    if p < 1 or p % 10 != 1:
        raise UsageError(f"p = {p} must end in 1")


def cmd_factor(args) -> tuple[dict, int]:
    p = args.p
    _require_one(p)
    mode = DRange(args.dsearch_range)
    methods = ("oracle", "dsearch", "lambda") if args.method == "all" else (args.method,)
    cases_out = []
    for case in args.case:
        entry = {"case": case.value, "oracle": [], "dsearch": [], "lambda": [],
                 "lambda_applicable": case is Case.SEVEN_THREE, "agreement": True}
        sets = []
        if "oracle" in methods:
            reps = sorted(oracle_representations(p, case))
            entry["oracle"] = [{"a": r.a, "b": r.b} for r in reps]
            sets.append({(r.a, r.b) for r in reps})
        if "dsearch" in methods:
            ws = sorted(dsearch_representations(p, case, mode), key=lambda w: (w.rep.a, w.rep.b))
            entry["dsearch"] = [{"a": w.rep.a, "b": w.rep.b, "d": w.d, "s": w.s,
                                 "form": w.form.to_dict()} for w in ws]
            sets.append({(w.rep.a, w.rep.b) for w in ws})
        if "lambda" in methods and case is Case.SEVEN_THREE:
            ls = sorted(lambda_representations(p), key=lambda w: (w.rep.a, w.rep.b, w.form_index))
            entry["lambda"] = [{"a": w.rep.a, "b": w.rep.b, "lambda": w.lam,
                                "form_index": w.form_index} for w in ls]
            for form in (1, 2):
                sets.append({(w.rep.a, w.rep.b) for w in ls if w.form_index == form})
        entry["agreement"] = all(s == sets[0] for s in sets)
        cases_out.append(entry)
    out = {"p": p, "methods": list(methods), "dsearch_range": mode.value, "cases": cases_out,
           "agreement": all(c["agreement"] for c in cases_out)}
    reps = sum(len(c["oracle"] or c["dsearch"] or c["lambda"]) for c in cases_out)
    print(f"factor {p}: {reps} representation(s), agreement={out['agreement']}", file=sys.stderr)
    return out, 0


def factor_csv(out: dict) -> str:
    lines = ["case,method,a,b,extra"]
    for c in out["cases"]:
        for method in ("oracle", "dsearch", "lambda"):
            for item in c[method]:
                extra = {k: v for k, v in item.items() if k not in ("a", "b")}
                lines.append(f'{c["case"]},{method},{item["a"]},{item["b"]},'
                             f'"{json.dumps(extra).replace(chr(34), chr(34) * 2)}"')
    return "\n".join(lines) + "\n"


# -- verify -----------------------------------------------------------------

def _next_representable(p: int, case: Case) -> list[Representation]:
    q = p + 10
    while q <= max_limit():
        reps = sorted(oracle_representations(q, case))
        if reps:
            return reps
        q += 10
    return []


def verify_checks(p: int, group: str, cases, pairing: Pairing = Pairing.LITERAL,
                  gate_both: bool = True, use_gap: bool = False,
                  mode: DRange = DRange.SOUND) -> tuple[list, list]:
    """BoundChecks for every instance of ``group`` at p, plus notes on skipped ones."""
    out, notes = [], []
    if group == "th3":
        if not is_prime(p):
            notes.append(f"p = {p} is not prime")
            return out, notes
        reps = sorted(oracle_representations(p + 10, Case.SEVEN_THREE))
        if not reps:
            notes.append(f"p + 10 = {p + 10} has no (10x+7)(10y+3) representation")
        for r in reps:
            out.extend(ck.check_th3(ck.Th3Instance(p, r.a, r.b)))
        return out, notes
    for case in cases:
        if group == "th4" and case is not Case.SEVEN_THREE:
            continue
        reps = sorted(oracle_representations(p, case))
        if group == "th1":
            out.extend(ck.check_th1(r) for r in reps)
        elif group == "obs2":
            out.extend(ck.check_obs2(r) for r in reps)
        elif group == "th2i":
            out.extend(ck.check_th2_interior(r) for r in reps)
        elif group == "th4":
            for r in reps:
                out.extend(ck.check_th4(r))
        elif group == "cor":
            if p <= VERIFY_DSCAN_MAX:
                ws = sorted(dsearch_representations(p, case, mode), key=lambda w: w.rep)
            else:
                ws = [ck.witness_from_rep(r) for r in reps]
            out.extend(ck.check_cor_range(w) for w in ws)
        elif group == "th2":
            if not reps:
                continue
            if pairing is Pairing.LITERAL:
                nxt = sorted(oracle_representations(p + 10, case))
            else:
                nxt = _next_representable(p, case)
            if not nxt:
                notes.append(f"case {case.value}: no representation to pair with (non-pairable)")
            for r in reps:
                for q in nxt:
                    out.append(ck.check_th2(ck.Th2Pair(r, q), gate_both, use_gap))
    return out, notes


def _exit_for(checks_: list) -> int:
    bad = any(c.verdict.outcome in (Outcome.FAIL, Outcome.BORDERLINE) for c in checks_)
    return 1 if bad else 0


def cmd_verify(args) -> tuple[dict, int]:
    p = args.p
    _require_one(p)
    checks_, notes = verify_checks(p, args.claim, args.case, Pairing(args.th2_pairing),
                                   args.th2_gate == "both", args.th2_use_gap,
                                   DRange(args.dsearch_range))
    counts = {o.value: 0 for o in Outcome}
    for c in checks_:
        counts[c.verdict.outcome.value] += 1
    out = {"p": p, "claim": args.claim, "checks": [c.to_record() for c in checks_],
           "counts": counts, "notes": notes}
    print(f"verify {p} {args.claim}: " + ", ".join(f"{k}={v}" for k, v in counts.items()),
          file=sys.stderr)
    return out, _exit_for(checks_)


# -- sweep ------------------------------------------------------------------

def cmd_sweep(args) -> tuple[dict, int]:
    config = SweepConfig(
        lo=args.lo, hi=args.hi, cases=args.case, claims=args.claims, workers=args.jobs,
        output_path=args.out, th2_pairing=Pairing(args.th2_pairing),
        dsearch_mode=DRange(args.dsearch_range), th2_gate_both=args.th2_gate == "both",
        th2_use_gap=args.th2_use_gap, records=args.records,
        fmt="csv" if args.format == "csv" else "jsonl", chunk_size=args.chunk_size,
        equivalence=not args.no_equivalence)
    report = sweep(config)
    out = report.to_dict()
    out["counterexample_count"] = len(report.counterexamples)
    out["counterexamples"] = report.counterexamples[:REPORT_SAMPLE]
    out["th2_evaluated_count"] = len(report.th2_evaluated)
    out["th2_evaluated"] = report.th2_evaluated[:REPORT_SAMPLE]
    out["output_path"] = args.out
    print(f"sweep [{config.start}, {config.hi}] in {report.elapsed:.2f}s: "
          f"{out['counterexample_count']} counterexample(s), "
          f"{len(report.method_equivalence['disagree'])} method disagreement(s)", file=sys.stderr)
    for claim, c in report.counters.items():
        print(f"  {claim:12s} " + " ".join(f"{k}={v}" for k, v in c.items()), file=sys.stderr)
    bad = report.failures > 0 or bool(report.method_equivalence["disagree"])
    return out, 1 if bad else 0


# -- stats ------------------------------------------------------------------

def cmd_stats(args) -> tuple[dict, int]:
    if args.primes is not None:
        m = transition_matrix(args.primes)
    else:
        m = transition_matrix_upto(args.limit)
    freqs = m.frequencies()
    out = {"primes": m.primes, "transitions": m.total, "last_prime": m.last_prime,
           "digits": list(DIGITS), "counts": m.counts.tolist(),
           "frequencies": [[float(x) for x in row] for row in freqs],
           "one_to_one": m.frequency(1, 1)}
    print(f"{m.primes} primes above 5 (last {m.last_prime}): "
          f"P(1 -> 1) = {out['one_to_one']:.4f}", file=sys.stderr)
    return out, 0


def stats_csv(out: dict) -> str:
    lines = ["from,to,count,frequency"]
    for i, src in enumerate(out["digits"]):
        for j, dst in enumerate(out["digits"]):
            lines.append(f"{src},{dst},{out['counts'][i][j]},{out['frequencies'][i][j]!r}")
    return "\n".join(lines) + "\n"


COMMANDS = {"factor": cmd_factor, "verify": cmd_verify, "sweep": cmd_sweep, "stats": cmd_stats}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out, code = COMMANDS[args.command](args)
    except (UsageError, ValueError, LimitExceeded) as exc:
        print(f"dcf: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"dcf: i/o error: {exc}", file=sys.stderr)
        return 2
    if args.format == "csv" and args.command != "sweep":
        if args.command == "verify":
            text = records_to_csv(out["checks"])
        elif args.command == "factor":
            text = factor_csv(out)
        else:
            text = stats_csv(out)
        sys.stdout.write(text)
    else:
        json.dump(out, sys.stdout, indent=2)
        sys.stdout.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
