"""Range campaigns over every p = 1 (mod 10) in an interval.

Work is cut into fixed chunks of ``chunk_size`` candidate values of p.  Each
chunk is processed independently (optionally in worker processes) and the
results are merged strictly in chunk order, so the report and the JSONL
stream do not depend on the worker count.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import multiprocessing
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

import numpy as np

from . import checks as ck
from .checks import Claim
from .factor import DRange, dsearch_range, lambda_range, oracle_range
from .numeric import ALL_CASES, Case, Representation, int_array
from .primes import check_limit, primes_between

RECORD_KEYS = ("claim", "p", "case", "applicable", "gate", "verdict", "lhs", "mid", "rhs",
               "exact", "witness")
COUNTER_KEYS = ("pass", "fail", "borderline", "not_applicable", "non_pairable")
_CODE_KEY = {ck.PASS: "pass", ck.FAIL: "fail", ck.BORDER: "borderline", ck.NA: "not_applicable"}
FORM_EXAMPLES = 25
FORM_KEYS = ("power", "nonconforming", "zero", "region_power", "region_nonconforming", "region_zero")


class Pairing(enum.Enum):
    LITERAL = "literal"
    CONSECUTIVE = "consecutive"


@dataclass(frozen=True)
class SweepConfig:
    lo: int
    hi: int
    cases: tuple = ALL_CASES
    claims: tuple = tuple(Claim)
    workers: int = 1
    output_path: Optional[str] = None
    th2_pairing: Pairing = Pairing.LITERAL
    dsearch_mode: DRange = DRange.SOUND
    th2_gate_both: bool = True
    th2_use_gap: bool = False
    records: str = "all"  # which checks go to output_path: all | failures
    fmt: str = "jsonl"  # jsonl | csv
    chunk_size: int = 10_000
    equivalence: bool = True

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty range [{self.lo}, {self.hi}]")
        if self.workers < 1 or self.chunk_size < 1:
            raise ValueError("workers and chunk_size must be positive")
        if self.records not in ("all", "failures"):
            raise ValueError(f"records must be 'all' or 'failures', not {self.records!r}")
        if self.fmt not in ("jsonl", "csv"):
            raise ValueError(f"unknown output format {self.fmt!r}")
        check_limit(self.hi)
        # order-normalize so equal configs produce equal output
        object.__setattr__(self, "cases", tuple(sorted(set(self.cases), key=lambda c: c.index)))
        object.__setattr__(self, "claims", tuple(sorted(set(self.claims), key=lambda c: c.index)))

    @property
    def start(self) -> int:
        """First value >= lo that ends in 1."""
        return self.lo + (1 - self.lo) % 10

    def chunks(self) -> list[tuple[int, int]]:
        out = []
        span = 10 * self.chunk_size
        lo = self.start
        while lo <= self.hi:
            out.append((lo, min(lo + span - 10, self.hi)))
            lo += span
        return out


@dataclass
class ChunkResult:
    counters: dict = field(default_factory=dict)  # (claim, case) -> np.ndarray(5)
    lines: list = field(default_factory=list)
    counterexamples: list = field(default_factory=list)
    agree: int = 0
    disagree: list = field(default_factory=list)
    forms: dict = field(default_factory=dict)  # case -> {"power", "nonconforming", "zero"}
    form_examples: dict = field(default_factory=dict)  # case -> list of nonconforming witnesses
    th3_instances: int = 0
    th3_exceptions: list = field(default_factory=list)
    th2_evaluated: list = field(default_factory=list)


@dataclass
class SweepReport:
    config: dict
    counters: dict
    by_case: dict
    counterexamples: list
    method_equivalence: dict
    forms: dict
    th3_strict_lower: dict
    th2_evaluated: list
    elapsed: float = 0.0

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "counters": self.counters,
            "by_case": self.by_case,
            "counterexamples": self.counterexamples,
            "method_equivalence": self.method_equivalence,
            "forms": self.forms,
            "th3_strict_lower": self.th3_strict_lower,
            "th2_evaluated": self.th2_evaluated,
            "elapsed": self.elapsed,
        }

    @property
    def failures(self) -> int:
        return sum(c["fail"] + c["borderline"] for c in self.counters.values())

    def consistent(self, instances: dict | None = None) -> bool:
        """Counters are nonnegative integers and by-case totals add up."""
        for claim, total in self.counters.items():
            summed = {k: sum(self.by_case[claim][c][k] for c in self.by_case[claim])
                      for k in COUNTER_KEYS}
            if summed != total or any(v < 0 for v in total.values()):
                return False
        return True


# -- per-chunk work ---------------------------------------------------------

def _rows_in(cols: dict, lo: int, hi: int) -> dict:
    i, j = np.searchsorted(cols["p"], [lo, hi + 1])
    return {k: v[i:j] for k, v in cols.items()}


def _as_set(cols: dict) -> set:
    return set(zip(cols["p"].tolist(), cols["a"].tolist(), cols["b"].tolist()))


def _bump(res: ChunkResult, claim: Claim, case: Case, codes: np.ndarray, non_pairable: int = 0):
    counts = res.counters.setdefault((claim, case), np.zeros(5, dtype=np.int64))
    binc = np.bincount(codes.astype(np.int64), minlength=4) if codes.size else np.zeros(4, np.int64)
    counts[0] += binc[ck.PASS]
    counts[1] += binc[ck.FAIL]
    counts[2] += binc[ck.BORDER]
    counts[3] += binc[ck.NA]
    counts[4] += non_pairable


class _Emitter:
    """Collects records (sorted at the end) for rows selected by config."""

    def __init__(self, config: SweepConfig, res: ChunkResult):
        self.config = config
        self.res = res
        self.items = []

    def wanted(self, codes: np.ndarray) -> np.ndarray:
        if self.config.records == "all" and self.config.output_path:
            return np.arange(codes.size)
        return np.flatnonzero((codes == ck.FAIL) | (codes == ck.BORDER))

    def add(self, check: ck.BoundCheck, tiebreak: tuple, expected_code: int):
        got = ck.CODE_OF[check.verdict.outcome]
        if got != expected_code:
            raise AssertionError(
                f"batch/scalar mismatch for {check.claim.value} p={check.p}: {expected_code} vs {got}")
        rec = check.to_record()
        key = (check.p, check.case.index, check.claim.index) + tiebreak
        self.items.append((key, rec, got))

    def finish(self):
        self.items.sort(key=lambda item: item[0])
        for _, rec, code in self.items:
            if code in (ck.FAIL, ck.BORDER):
                self.res.counterexamples.append(rec)
            if self.config.output_path and (self.config.records == "all"
                                            or code in (ck.FAIL, ck.BORDER)):
                self.res.lines.append(rec)


def _rep(p, case, a, b) -> Representation:
    return Representation(int(p), case, int(a), int(b))


def _simple_claim(em: _Emitter, res, claim, case, rows, kernel, scalar):
    p, a, b = rows["p"], rows["a"], rows["b"]
    codes = kernel(p, a, b, case)
    _bump(res, claim, case, codes)
    for i in em.wanted(codes):
        em.add(scalar(_rep(p[i], case, a[i], b[i])), (int(a[i]), int(b[i])), int(codes[i]))


def _next_values(reps: dict, chunk_hi: int, config: SweepConfig, case: Case):
    """Representations at the paired values, extending the lookahead as needed."""
    reps = _rows_in(reps, 0, chunk_hi)
    look = 1000
    while True:
        ext = oracle_range(chunk_hi + 1, chunk_hi + look, case)
        values = np.unique(np.concatenate([reps["p"], ext["p"]]))
        if values.size and values[-1] > chunk_hi:
            return {k: np.concatenate([reps[k], ext[k]]) for k in reps}, values
        look *= 4


def _th2(em: _Emitter, res: ChunkResult, config: SweepConfig, case: Case, rows: dict,
         all_reps: dict, chunk_hi: int):
    p, a, b = rows["p"], rows["a"], rows["b"]
    if config.th2_pairing is Pairing.LITERAL:
        target = p + 10
        pool = all_reps
    else:
        pool, values = _next_values(all_reps, chunk_hi, config, case)
        target = values[np.searchsorted(values, p, side="right")] if p.size else p
    left = np.searchsorted(pool["p"], target, side="left")
    right = np.searchsorted(pool["p"], target, side="right")
    width = right - left
    unpaired = int((width == 0).sum())
    idx = np.repeat(np.arange(p.size), width)
    first = np.cumsum(width) - width
    j = left[idx] + (np.arange(idx.size) - first[idx])
    p2, a2, b2 = pool["p"][j], pool["a"][j], pool["b"][j]
    pi, ai, bi = p[idx], a[idx], b[idx]
    codes = ck.batch_th2(pi, ai, bi, p2, a2, b2, case, config.th2_gate_both, config.th2_use_gap) \
        if idx.size else np.zeros(0, dtype=np.int8)
    _bump(res, Claim.TH2_FINAL, case, codes, unpaired)
    emit = set(em.wanted(codes).tolist())
    for i in range(idx.size):
        if codes[i] == ck.NA and i not in emit:
            continue
        check = ck.check_th2(ck.Th2Pair(_rep(pi[i], case, ai[i], bi[i]),
                                        _rep(p2[i], case, a2[i], b2[i])),
                             config.th2_gate_both, config.th2_use_gap)
        if codes[i] != ck.NA:
            res.th2_evaluated.append({"p": int(pi[i]), "case": case.value,
                                      "verdict": check.verdict.outcome.value,
                                      "a": int(ai[i]), "b": int(bi[i]), "p_next": int(p2[i]),
                                      "a_next": int(a2[i]), "b_next": int(b2[i])})
        if i in emit:
            em.add(check, (int(ai[i]), int(bi[i]), int(p2[i]), int(a2[i]), int(b2[i])),
                   int(codes[i]))


def _th3(em: _Emitter, res: ChunkResult, config: SweepConfig, lo: int, hi: int,
         reps: dict):
    primes = primes_between(lo, hi)
    primes = primes[primes % 10 == 1]
    left = np.searchsorted(reps["p"], primes + 10, side="left")
    right = np.searchsorted(reps["p"], primes + 10, side="right")
    width = right - left
    unpaired = int((width == 0).sum())
    idx = np.repeat(np.arange(primes.size), width)
    first = np.cumsum(width) - width
    j = left[idx] + (np.arange(idx.size) - first[idx])
    p = int_array(primes[idx], hi)
    a, b = int_array(reps["a"][j], hi), int_array(reps["b"][j], hi)
    c1, c2, strict, constructible = ck.batch_th3(p, a, b)
    res.th3_instances += int(constructible.sum())
    for i in np.flatnonzero(constructible & ~strict):
        res.th3_exceptions.append({"p": int(p[i]), "a": int(a[i]), "b": int(b[i])})
    for claim, codes in ((Claim.TH3_LOWER, c1), (Claim.TH3_RATIO, c2)):
        if claim not in config.claims:
            continue
        _bump(res, claim, Case.SEVEN_THREE, codes, unpaired)
        for i in em.wanted(codes):
            pair = ck.check_th3(ck.Th3Instance(int(p[i]), int(a[i]), int(b[i])))
            em.add(pair[0] if claim is Claim.TH3_LOWER else pair[1],
                   (int(a[i]), int(b[i])), int(codes[i]))


def _equivalence(res: ChunkResult, config: SweepConfig, case: Case, lo: int, hi: int,
                 oracle_rows: dict):
    ref = _as_set(oracle_rows)
    found = {"dsearch": _as_set(dsearch_range(lo, hi, case, config.dsearch_mode))}
    if case is Case.SEVEN_THREE:
        lam = lambda_range(lo, hi)
        for form in (1, 2):
            sel = lam["form"] == form
            found[f"lambda{form}"] = _as_set({k: lam[k][sel] for k in ("p", "a", "b")})
    values = {r[0] for r in ref}
    bad = set()
    for other in found.values():
        values |= {r[0] for r in other}
        bad |= {r[0] for r in ref ^ other}
    res.agree += len(values - bad)
    for pv in sorted(bad):
        entry = {"p": pv, "case": case.value,
                 "oracle": sorted([r[1], r[2]] for r in ref if r[0] == pv)}
        for name, other in found.items():
            entry[name] = sorted([r[1], r[2]] for r in other if r[0] == pv)
        res.disagree.append(entry)


def _forms(res: ChunkResult, case: Case, p, a, b, cor_codes_d_s):
    codes, d, s, conforming, zero = cor_codes_d_s
    bucket = res.forms.setdefault(case, dict.fromkeys(FORM_KEYS, 0))
    bad = ~conforming & ~zero
    region = codes != ck.NA
    for prefix, mask in (("", np.ones_like(region)), ("region_", region)):
        bucket[prefix + "zero"] += int((zero & mask).sum())
        bucket[prefix + "power"] += int((conforming & mask).sum())
        bucket[prefix + "nonconforming"] += int((bad & mask).sum())
    # examples only where the region gate holds: those are counterexamples to the form claim
    ex = res.form_examples.setdefault(case, [])
    for i in np.flatnonzero(bad & region)[: FORM_EXAMPLES]:
        ex.append({"p": int(p[i]), "a": int(a[i]), "b": int(b[i]), "d": int(d[i]), "s": int(s[i])})


def process_chunk(config: SweepConfig, lo: int, hi: int) -> ChunkResult:
    res = ChunkResult()
    em = _Emitter(config, res)
    claims = set(config.claims)
    need_next = Claim.TH2_FINAL in claims or Claim.TH3_LOWER in claims or Claim.TH3_RATIO in claims
    for case in config.cases:
        reps = oracle_range(lo, hi + (10 if need_next else 0), case)
        rows = _rows_in(reps, lo, hi)
        rows = {k: int_array(v, hi) for k, v in rows.items()}
        if config.equivalence:
            _equivalence(res, config, case, lo, hi, rows)
        if Claim.TH1 in claims:
            _simple_claim(em, res, Claim.TH1, case, rows, ck.batch_th1, ck.check_th1)
        if Claim.OBS2 in claims:
            _simple_claim(em, res, Claim.OBS2, case, rows, ck.batch_obs2, ck.check_obs2)
        if Claim.TH2_INTERIOR in claims:
            _simple_claim(em, res, Claim.TH2_INTERIOR, case, rows, ck.batch_th2_interior,
                          ck.check_th2_interior)
        if Claim.TH2_FINAL in claims:
            _th2(em, res, config, case, rows, reps, hi)
        if case is Case.SEVEN_THREE:
            if Claim.TH4_A in claims:
                _simple_claim(em, res, Claim.TH4_A, case, rows,
                              lambda p, a, b, _: ck.batch_th4(p, a, b, "A"),
                              lambda r: ck.check_th4(r)[0])
            if Claim.TH4_B in claims:
                _simple_claim(em, res, Claim.TH4_B, case, rows,
                              lambda p, a, b, _: ck.batch_th4(p, a, b, "B"),
                              lambda r: ck.check_th4(r)[1])
            if Claim.TH3_LOWER in claims or Claim.TH3_RATIO in claims:
                _th3(em, res, config, lo, hi, reps)
        if Claim.COR_RANGE in claims:
            p, a, b = rows["p"], rows["a"], rows["b"]
            out = ck.batch_cor(p, a, b, case)
            _bump(res, Claim.COR_RANGE, case, out[0])
            _forms(res, case, p, a, b, out)
            for i in em.wanted(out[0]):
                em.add(ck.check_cor_range(ck.witness_from_rep(_rep(p[i], case, a[i], b[i]))),
                       (int(a[i]), int(b[i])), int(out[0][i]))
    em.finish()
    return res


def _run_chunk(args):
    config, lo, hi = args
    return process_chunk(config, lo, hi)


# -- sweep ------------------------------------------------------------------

def _iter_results(config: SweepConfig) -> Iterator[ChunkResult]:
    work = [(config, lo, hi) for lo, hi in config.chunks()]
    if config.workers == 1 or len(work) == 1:
        yield from map(_run_chunk, work)
        return
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(config.workers) as pool:
        yield from pool.imap(_run_chunk, work)


def config_dict(config: SweepConfig) -> dict:
    return {
        "lo": config.lo, "hi": config.hi, "start": config.start,
        "cases": [c.value for c in config.cases],
        "claims": [c.value for c in config.claims],
        "th2_pairing": config.th2_pairing.value,
        "th2_gate_both": config.th2_gate_both,
        "th2_use_gap": config.th2_use_gap,
        "dsearch_mode": config.dsearch_mode.value,
        "chunk_size": config.chunk_size,
        "equivalence": config.equivalence,
    }


def sweep(config: SweepConfig) -> SweepReport:
    t0 = time.perf_counter()
    totals: dict = {}
    examples: dict = {}
    forms: dict = {}
    counterexamples, disagree, th2_evaluated, th3_exceptions = [], [], [], []
    agree = th3_instances = 0
    writer = RecordWriter(config.output_path, config.fmt) if config.output_path else None
    try:
        for res in _iter_results(config):
            for key, counts in res.counters.items():
                totals.setdefault(key, np.zeros(5, dtype=np.int64))
                totals[key] += counts
            for case, bucket in res.forms.items():
                acc = forms.setdefault(case, dict.fromkeys(FORM_KEYS, 0))
                for k, v in bucket.items():
                    acc[k] += v
            for case, ex in res.form_examples.items():
                room = FORM_EXAMPLES - len(examples.setdefault(case, []))
                examples[case].extend(ex[:max(room, 0)])
            counterexamples.extend(res.counterexamples)
            agree += res.agree
            disagree.extend(res.disagree)
            th2_evaluated.extend(res.th2_evaluated)
            th3_instances += res.th3_instances
            th3_exceptions.extend(res.th3_exceptions)
            if writer:
                writer.write_many(res.lines)
    finally:
        if writer:
            writer.close()

    counters, by_case = {}, {}
    for claim in config.claims:
        cases = [c for c in config.cases if (claim, c) in totals]
        if not cases:
            continue
        by_case[claim.value] = {c.value: dict(zip(COUNTER_KEYS, map(int, totals[(claim, c)])))
                                for c in cases}
        counters[claim.value] = {k: sum(by_case[claim.value][c][k] for c in by_case[claim.value])
                                 for k in COUNTER_KEYS}
    form_report = {}
    for case in config.cases:
        if case in forms:
            bucket = forms[case]
            considered = bucket["power"] + bucket["nonconforming"]
            in_region = bucket["region_power"] + bucket["region_nonconforming"]
            form_report[case.value] = dict(
                bucket,
                conforming_fraction=(bucket["power"] / considered) if considered else None,
                region_conforming_fraction=(bucket["region_power"] / in_region) if in_region else None,
                nonconforming_examples=examples.get(case, []))
    return SweepReport(
        config=config_dict(config),
        counters=counters,
        by_case=by_case,
        counterexamples=counterexamples,
        method_equivalence={"enabled": config.equivalence, "agree": agree, "disagree": disagree},
        forms=form_report,
        th3_strict_lower={"instances": th3_instances, "exceptions": th3_exceptions},
        th2_evaluated=th2_evaluated,
        elapsed=time.perf_counter() - t0,
    )


# -- monotonicity of A*B along representable values ------------------------

@dataclass
class MonotonicityResult:
    case: Case
    limit: int
    values: int
    pairs: int
    increasing: dict  # variant -> count of strictly increasing adjacent pairs
    violations: dict  # variant -> list of (p, p_next, ab, ab_next)

    def fraction(self, variant: str = "max") -> float:
        return 1.0 if self.pairs == 0 else self.increasing[variant] / self.pairs

    def to_dict(self, max_violations: int | None = None) -> dict:
        return {
            "case": self.case.value, "limit": self.limit, "values": self.values,
            "pairs": self.pairs,
            "fraction": {v: self.fraction(v) for v in self.increasing},
            "violation_counts": {v: len(x) for v, x in self.violations.items()},
            "violations": {v: x[:max_violations] if max_violations is not None else x
                           for v, x in self.violations.items()},
        }


def monotonicity_study(case: Case, limit: int) -> MonotonicityResult:
    """Is A*B increasing along the ascending representable values of p?

    Variants: ``max``/``min`` compare the largest/smallest A*B over the
    representations of each value; ``all`` needs every representation of the
    next value to exceed every representation of the current one.
    """
    if limit < 100:
        raise ValueError("limit must be at least 100")
    reps = oracle_range(1, limit, case)
    ab = (reps["a"] + 1) * (reps["b"] + 1)
    values, start = np.unique(reps["p"], return_index=True)
    mx = np.maximum.reduceat(ab, start) if ab.size else ab
    mn = np.minimum.reduceat(ab, start) if ab.size else ab
    inc, viol = {}, {}
    for name, cur, nxt in (("max", mx[:-1], mx[1:]), ("min", mn[:-1], mn[1:]),
                           ("all", mx[:-1], mn[1:])):
        ok = nxt > cur
        inc[name] = int(ok.sum())
        bad = np.flatnonzero(~ok)
        viol[name] = [(int(values[i]), int(values[i + 1]), int(cur[i]), int(nxt[i])) for i in bad]
    return MonotonicityResult(case, limit, int(values.size), max(int(values.size) - 1, 0),
                              inc, viol)


# -- record i/o -------------------------------------------------------------

def dumps_record(record: dict) -> str:
    return json.dumps({k: record[k] for k in RECORD_KEYS}, separators=(", ", ": "))


def csv_row(record: dict) -> list:
    row = []
    for k in RECORD_KEYS:
        v = record[k]
        if k == "witness":
            v = "" if v is None else json.dumps(v, sort_keys=False)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        row.append(v)
    return row


class RecordWriter:
    def __init__(self, path, fmt: str = "jsonl"):
        self.path = Path(path)
        self.fmt = fmt
        try:
            self.fh = self.path.open("w", newline="" if fmt == "csv" else None)
        except OSError as exc:
            raise OSError(f"cannot open {self.path}: {exc}") from exc
        if fmt == "csv":
            self.csv = csv.writer(self.fh, lineterminator="\n")
            self.csv.writerow(RECORD_KEYS)

    def write_many(self, records: Iterable[dict]):
        if self.fmt == "csv":
            self.csv.writerows(csv_row(r) for r in records)
        else:
            self.fh.writelines(dumps_record(r) + "\n" for r in records)

    def close(self):
        self.fh.close()


def write_jsonl(records: Iterable[dict], path) -> None:
    w = RecordWriter(path, "jsonl")
    try:
        w.write_many(records)
    finally:
        w.close()


class MalformedRecord(ValueError):
    pass


def read_jsonl(path) -> list[dict]:
    out = []
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, 1):
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"{path}:{lineno}: {exc.msg}") from None
            if not isinstance(rec, dict) or set(rec) != set(RECORD_KEYS):
                raise MalformedRecord(f"{path}:{lineno}: record does not match the schema")
            out.append(rec)
    return out


def records_to_csv(records: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_KEYS)
    w.writerows(csv_row(r) for r in records)
    return buf.getvalue()
