"""One checker per claim, each returning a :class:`BoundCheck`.

Rational comparisons are exact (``Fraction``).  Bounds involving ``exp`` or
real powers go through :func:`dcf.numeric.compare_log_bound`.  Every check
computes its sides even when the gating condition fails, so a gated instance
still shows what the bare inequality would have said (``ungated``).

The ``batch_*`` functions are numpy versions of the same checks used by the
sweeps; they return outcome-code arrays and are cross-checked against the
scalar versions in the test suite.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import mpmath
import numpy as np

from .factor import DISC_OFFSET, DISC_SCALE, DSearchWitness, Parity, form_classify
from .numeric import (
    LOG_DPS, Case, Outcome, Representation, Verdict, compare_log_bound, const,
    is_perfect_square, ln_of, render, render_approx, screen_log_diffs,
    sqrt_over,
)
from .primes import is_prime


class Claim(enum.Enum):
    TH1 = "Th1"
    OBS2 = "Obs2"
    TH2_FINAL = "Th2Final"
    TH2_INTERIOR = "Th2Interior"
    TH3_LOWER = "Th3Lower"
    TH3_RATIO = "Th3Ratio"
    TH4_A = "Th4A"
    TH4_B = "Th4B"
    COR_RANGE = "CorRange"

    @property
    def index(self) -> int:
        return _CLAIM_INDEX[self]


_CLAIM_INDEX = {c: i for i, c in enumerate(Claim)}


#: command-line names -> claims they expand to
CLAIM_GROUPS = {
    "th1": (Claim.TH1,),
    "obs2": (Claim.OBS2,),
    "th2": (Claim.TH2_FINAL,),
    "th2i": (Claim.TH2_INTERIOR,),
    "th3": (Claim.TH3_LOWER, Claim.TH3_RATIO),
    "th4": (Claim.TH4_A, Claim.TH4_B),
    "cor": (Claim.COR_RANGE,),
}

TH1_GATE = {Case.SEVEN_THREE: (4, 8), Case.NINE_NINE: (2, 2), Case.ONE_ONE: (10, 10)}
TH2_GATE = {Case.SEVEN_THREE: (31, 71), Case.NINE_NINE: (11, 11), Case.ONE_ONE: (91, 91)}
COR_REGION = {Case.SEVEN_THREE: (3, 7), Case.NINE_NINE: (2, 2), Case.ONE_ONE: (9, 9)}

TH2_CONST = Fraction(201, 10**6)
TH2_EXPONENT = Fraction(101, 1000) ** 2
TH2_INTERIOR_FACTOR = Fraction(101**2, 10**6)
TH1_UPPER = Fraction(121, 10**4)
TH3_X0_MIN = Fraction(33, 10)

Side = Union[Fraction, str]


@dataclass
class BoundCheck:
    claim: Claim
    p: int
    case: Case
    applicable: bool
    gate: str
    verdict: Verdict
    lhs: Side
    mid: Side
    rhs: Side
    exact: bool
    ungated: Outcome
    witness: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.applicable:
            assert self.verdict.outcome is Outcome.NOT_APPLICABLE and self.gate
        else:
            assert not self.gate

    def to_record(self) -> dict:
        return {
            "claim": self.claim.value,
            "p": _json_int(self.p),
            "case": self.case.value,
            "applicable": self.applicable,
            "gate": self.gate,
            "verdict": self.verdict.outcome.value,
            "lhs": render(self.lhs),
            "mid": render(self.mid),
            "rhs": render(self.rhs),
            "exact": self.exact,
            "witness": dict(self.witness, ungated=self.ungated.value),
        }


def _json_int(v: int):
    return v if abs(v) < 2**53 else str(v)


def _finish(claim, p, case, gate, ungated: Verdict, lhs, mid, rhs, exact, witness) -> BoundCheck:
    applicable = not gate
    verdict = ungated if applicable else Verdict(Outcome.NOT_APPLICABLE)
    return BoundCheck(claim, p, case, applicable, gate, verdict, lhs, mid, rhs, exact,
                      ungated.outcome, witness)


def _gate_ab(A: int, B: int, need: tuple[int, int], suffix: str = "") -> str:
    if A < need[0]:
        return f"A{suffix} = {A} < {need[0]}"
    if B < need[1]:
        return f"B{suffix} = {B} < {need[1]}"
    return ""


def _rep_witness(rep: Representation) -> dict:
    return {"a": rep.a, "b": rep.b}


def _between(lo, x, hi, strict: bool = False) -> Verdict:
    if strict:
        return Verdict.of(lo < x < hi)
    return Verdict.of(lo <= x <= hi)


# -- Th1 / Obs2 -------------------------------------------------------------

def check_th1(rep: Representation) -> BoundCheck:
    p, A, B = rep.p, rep.A, rep.B
    lhs, mid, rhs = Fraction(p, 100), Fraction(A * B), TH1_UPPER * p
    gate = _gate_ab(A, B, TH1_GATE[rep.case])
    return _finish(Claim.TH1, p, rep.case, gate, _between(lhs, mid, rhs),
                   lhs, mid, rhs, True, _rep_witness(rep))


def check_obs2(rep: Representation) -> BoundCheck:
    lhs, mid, rhs = Fraction(100 * rep.a * rep.b), Fraction(rep.p), Fraction(100 * rep.A * rep.B)
    return _finish(Claim.OBS2, rep.p, rep.case, "", _between(lhs, mid, rhs),
                   lhs, mid, rhs, True, _rep_witness(rep))


# -- Th2 ------------------------------------------------------------------

@dataclass(frozen=True)
class Th2Pair:
    """Representations of p and of the next value it is compared with.

    With the literal pairing ``rep_next.p == p + 10``; with the consecutive
    pairing it is the next representable value of the same case.
    """

    rep_p: Representation
    rep_next: Representation

    def __post_init__(self):
        if self.rep_p.case is not self.rep_next.case:
            raise ValueError("Th2Pair representations must share a case")
        if self.rep_next.p <= self.rep_p.p:
            raise ValueError("Th2Pair needs rep_next.p > rep_p.p")

    @property
    def p(self) -> int:
        return self.rep_p.p

    @property
    def case(self) -> Case:
        return self.rep_p.case

    @property
    def literal(self) -> bool:
        return self.rep_next.p == self.p + 10


def th2_rhs_log(p: int, step: int = 10) -> list:
    return [const(TH2_CONST), ln_of(TH2_EXPONENT, 1 + Fraction(step, p))]


def check_th2(pair: Th2Pair, gate_both: bool = True, use_gap: bool = False) -> BoundCheck:
    """``1 <= (A'B'/AB)^(1/100) <= e^0.000201 (1 + 10/p)^(0.101^2)``.

    ``use_gap`` replaces the 10 in ``1 + 10/p`` by the actual distance to the
    paired value (only meaningful with the consecutive pairing).
    """
    r, q = pair.rep_p, pair.rep_next
    p = pair.p
    need = TH2_GATE[pair.case]
    gate = _gate_ab(r.A, r.B, need, "(p)")
    if not gate and gate_both:
        gate = _gate_ab(q.A, q.B, need, "(p+10)" if pair.literal else "(p')")
    step = q.p - p if use_gap else 10
    ratio = Fraction(q.A * q.B, r.A * r.B)
    rhs_log = th2_rhs_log(p, step)
    if ratio < 1:
        ungated = Verdict(Outcome.FAIL)
    else:
        ungated = compare_log_bound(ratio, rhs_log, power=Fraction(1, 100))
    with mpmath.workdps(LOG_DPS):
        mid = mpmath.exp(mpmath.log(mpmath.mpf(ratio.numerator) / ratio.denominator) / 100)
        rhs = mpmath.exp(sum(t.evaluate() for t in rhs_log))
    witness = {"a": r.a, "b": r.b, "p_next": q.p, "a_next": q.a, "b_next": q.b, "step": step,
               "gate_both": gate_both}
    return _finish(Claim.TH2_FINAL, p, pair.case, gate, ungated, Fraction(1),
                   render_approx(mid), render_approx(rhs), False, witness)


def check_th2_interior(rep: Representation) -> BoundCheck:
    p, A, B = rep.p, rep.A, rep.B
    lhs, mid, rhs = Fraction(p, 100), Fraction(A * B), TH2_INTERIOR_FACTOR * p
    gate = _gate_ab(A, B, TH2_GATE[rep.case])
    return _finish(Claim.TH2_INTERIOR, p, rep.case, gate, _between(lhs, mid, rhs),
                   lhs, mid, rhs, True, _rep_witness(rep))


# -- Th3 ------------------------------------------------------------------

@dataclass(frozen=True)
class Th3Instance:
    """p prime ending in 1 with p + 10 = (10a+7)(10b+3).

    The rational x0 solves p = (10 x0 + 7)(10b + 3); the bound needs it
    positive, which :func:`check_th3` treats as a gate.
    """

    p: int
    a: int
    b: int

    def __post_init__(self):
        if self.p % 10 != 1:
            raise ValueError(f"p = {self.p} does not end in 1")
        if (10 * self.a + 7) * (10 * self.b + 3) != self.p + 10:
            raise ValueError(f"p + 10 = {self.p + 10} != (10a+7)(10b+3) for a={self.a}, b={self.b}")
        if not is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        assert (10 * self.x0 + 7) * (10 * self.b + 3) == self.p

    @property
    def x0(self) -> Fraction:
        return (Fraction(self.p, 10 * self.b + 3) - 7) / 10

    @property
    def X0(self) -> Fraction:
        return self.x0 + 1

    @property
    def A(self) -> int:
        return self.a + 1

    @property
    def constructible(self) -> bool:
        return self.x0 > 0


def th3_constructible(p: int, a: int, b: int) -> bool:
    """x0 > 0, i.e. p > 7(10b + 3)."""
    return p > 7 * (10 * b + 3)


def check_th3(inst: Th3Instance) -> tuple[BoundCheck, BoundCheck]:
    p, A, X0 = inst.p, inst.A, inst.X0
    ratio = A / X0
    witness = {"a": inst.a, "b": inst.b, "x0": render(inst.x0)}
    pre = "" if inst.constructible else f"x0 = {render(inst.x0)} <= 0"
    lo1, hi1 = Fraction(1), (1 + Fraction(10, p)) * Fraction(101, 100)
    gate1 = pre or (f"A = {A} < 31" if A < 31 else "")
    first = _finish(Claim.TH3_LOWER, p, Case.SEVEN_THREE, gate1,
                    _between(lo1, ratio, hi1, strict=True), lo1, ratio, hi1, True, witness)
    lo2, hi2 = Fraction(10 * (p + 10), 11 * p), Fraction(101 * (p + 10), 100 * p)
    gate2 = pre or (f"X0 = {render(X0)} < 33/10" if X0 < TH3_X0_MIN else "")
    second = _finish(Claim.TH3_RATIO, p, Case.SEVEN_THREE, gate2,
                     _between(lo2, ratio, hi2, strict=True), lo2, ratio, hi2, True, witness)
    return first, second


# -- Th4 ------------------------------------------------------------------

def _require_73(rep: Representation) -> None:
    if rep.case is not Case.SEVEN_THREE:
        raise ValueError("Th4 checks apply to the (10x+7)(10y+3) case only")


def th4_rhs_log(p: int, branch: str) -> list:
    if branch == "A":
        return [sqrt_over(7, p), const(Fraction(-259, p))]
    return [sqrt_over(3, p), const(Fraction(-3, p))]


def _th4_branch(rep: Representation, branch: str) -> BoundCheck:
    p = rep.p
    if branch == "A":
        v, low, shift, mult, base, claim = rep.A, 4, 3, 70, 259, Claim.TH4_A
    else:
        v, low, shift, mult, base, claim = rep.B, 8, 7, 30, 219, Claim.TH4_B
    if v < low:
        gate = f"{branch} = {v} < {low}"
    elif (10 * v - shift) ** 2 > p:
        gate = f"(10{branch} - {shift})^2 = {(10 * v - shift) ** 2} > {p}"
    else:
        gate = ""
    mid = Fraction(p + mult * v - 21, p + base)
    rhs_log = th4_rhs_log(p, branch)
    if mid < 1:
        ungated = Verdict(Outcome.FAIL)
    else:
        ungated = compare_log_bound(mid, rhs_log)
    with mpmath.workdps(LOG_DPS):
        rhs = render_approx(mpmath.exp(sum(t.evaluate() for t in rhs_log)))
    return _finish(claim, p, rep.case, gate, ungated, Fraction(1), mid, rhs, False,
                   _rep_witness(rep))


def check_th4(rep: Representation) -> tuple[BoundCheck, BoundCheck]:
    _require_73(rep)
    return _th4_branch(rep, "A"), _th4_branch(rep, "B")


# -- d-interval (CorRange) -------------------------------------------------

def cor_upper(p: int, case: Case) -> Fraction:
    if case is Case.SEVEN_THREE:
        return Fraction(21 * p, 1000) - Fraction(79, 10)
    if case is Case.NINE_NINE:
        return Fraction(p - 81, 90)
    return Fraction(p - 1, 10)


def check_cor_range(witness: DSearchWitness) -> BoundCheck:
    rep, d = witness.rep, witness.d
    p, case = rep.p, rep.case
    offset, scale = DISC_OFFSET[case], DISC_SCALE[case]
    need = COR_REGION[case]
    if rep.a < need[0]:
        gate = f"x = {rep.a} < {need[0]}"
    elif rep.b < need[1]:
        gate = f"y = {rep.b} < {need[1]}"
    else:
        gate = ""
    t = 5 * d + offset
    lower_ok = t >= 0 and t * t >= scale * p
    upper = cor_upper(p, case)
    ungated = Verdict.of(lower_ok and d <= upper)
    root = is_perfect_square(scale * p)
    if root is not None:
        lhs: Side = Fraction(root - offset, 5)
    else:
        with mpmath.workdps(LOG_DPS):
            lhs = render_approx((mpmath.sqrt(scale * p) - offset) / 5)
    w = {"a": rep.a, "b": rep.b, "d": d, "s": witness.s, "form": witness.form.to_dict()}
    return _finish(Claim.COR_RANGE, p, case, gate, ungated, lhs, Fraction(d), upper,
                   root is not None, w)


def witness_from_rep(rep: Representation) -> DSearchWitness:
    """The d-search witness of a representation via the discriminant identity."""
    x, y = rep.a, rep.b
    if rep.case is Case.SEVEN_THREE:
        d, s = 7 * x + 3 * y, 5 * abs(7 * x - 3 * y + 4)
    else:
        d, s = x + y, 5 * abs(x - y)
    return DSearchWitness(d, s, rep, form_classify(s, Parity.EVEN if d % 2 == 0 else Parity.ODD))


# -- reload / re-verification ----------------------------------------------

def recheck(record: dict) -> BoundCheck:
    """Re-run the named check on the inputs stored in a JSONL record."""
    claim = Claim(record["claim"])
    case = Case.parse(record["case"])
    p = int(record["p"])
    w = record["witness"] or {}
    if claim in (Claim.TH3_LOWER, Claim.TH3_RATIO):
        inst = Th3Instance(p, int(w["a"]), int(w["b"]))
        first, second = check_th3(inst)
        return first if claim is Claim.TH3_LOWER else second
    rep = Representation(p, case, int(w["a"]), int(w["b"]))
    if claim is Claim.TH1:
        return check_th1(rep)
    if claim is Claim.OBS2:
        return check_obs2(rep)
    if claim is Claim.TH2_INTERIOR:
        return check_th2_interior(rep)
    if claim is Claim.TH2_FINAL:
        nxt = Representation(int(w["p_next"]), case, int(w["a_next"]), int(w["b_next"]))
        # a step of 10 reads the same with or without the gap option
        return check_th2(Th2Pair(rep, nxt), gate_both=bool(w["gate_both"]),
                         use_gap=int(w["step"]) != 10)
    if claim in (Claim.TH4_A, Claim.TH4_B):
        return _th4_branch(rep, "A" if claim is Claim.TH4_A else "B")
    return check_cor_range(witness_from_rep(rep))


# -- batch kernels ----------------------------------------------------------
# Outcome codes shared with the harness.
PASS, FAIL, NA, BORDER = 0, 1, 2, 3
CODE_OF = {Outcome.PASS: PASS, Outcome.FAIL: FAIL, Outcome.NOT_APPLICABLE: NA,
           Outcome.BORDERLINE: BORDER}
OUTCOME_OF = {v: k for k, v in CODE_OF.items()}


def _codes(applicable: np.ndarray, ok: np.ndarray) -> np.ndarray:
    return np.where(applicable, np.where(ok, PASS, FAIL), NA).astype(np.int8)


def batch_th1(p, a, b, case: Case):
    A, B = a + 1, b + 1
    ga, gb = TH1_GATE[case]
    ok = (100 * A * B >= p) & (10**4 * A * B <= 121 * p)
    return _codes((A >= ga) & (B >= gb), ok)


def batch_obs2(p, a, b, case: Case):
    ok = (100 * a * b <= p) & (p <= 100 * (a + 1) * (b + 1))
    return _codes(np.ones(p.shape, dtype=bool), ok)


def batch_th2_interior(p, a, b, case: Case):
    A, B = a + 1, b + 1
    ga, gb = TH2_GATE[case]
    ok = (100 * A * B >= p) & (10**6 * A * B <= 10201 * p)
    return _codes((A >= ga) & (B >= gb), ok)


def batch_th2(p, a, b, p2, a2, b2, case: Case, gate_both=True, use_gap=False):
    A, B, A2, B2 = a + 1, b + 1, a2 + 1, b2 + 1
    ga, gb = TH2_GATE[case]
    applicable = (A >= ga) & (B >= gb)
    if gate_both:
        applicable &= (A2 >= ga) & (B2 >= gb)
    step = (p2 - p) if use_gap else np.full(p.shape, 10, dtype=np.int64)
    lower_ok = A2 * B2 >= A * B
    fl = np.float64
    ln_ratio = (np.log((A2 * B2).astype(fl)) - np.log((A * B).astype(fl))) / 100
    rhs = float(TH2_CONST) + float(TH2_EXPONENT) * np.log1p(step.astype(fl) / p.astype(fl))
    approx = rhs - ln_ratio

    def exact(i):
        ratio = Fraction(int(A2[i] * B2[i]), int(A[i] * B[i]))
        return compare_log_bound(ratio, th2_rhs_log(int(p[i]), int(step[i])), Fraction(1, 100))

    upper = screen_log_diffs(approx, exact)
    return _merge(applicable, lower_ok, upper)


def _merge(applicable, lower_ok, upper_outcomes) -> np.ndarray:
    codes = np.array([CODE_OF[o] for o in upper_outcomes], dtype=np.int8) if len(upper_outcomes) else \
        np.zeros(0, dtype=np.int8)
    codes = np.where(lower_ok, codes, FAIL)
    return np.where(applicable, codes, NA).astype(np.int8)


def batch_th4(p, a, b, branch: str):
    if branch == "A":
        v, low, shift, mult, base = a + 1, 4, 3, 70, 259
    else:
        v, low, shift, mult, base = b + 1, 8, 7, 30, 219
    applicable = (v >= low) & ((10 * v - shift) ** 2 <= p)
    num = p + mult * v - 21
    den = p + base
    lower_ok = num >= den
    fl = np.float64
    pf = p.astype(fl)
    ln_mid = np.log1p((num - den).astype(fl) / den.astype(fl))
    if branch == "A":
        rhs = (7 * np.sqrt(pf) - 259) / pf
    else:
        rhs = (3 * np.sqrt(pf) - 3) / pf
    approx = rhs - ln_mid

    def exact(i):
        return compare_log_bound(Fraction(int(num[i]), int(den[i])), th4_rhs_log(int(p[i]), branch))

    upper = screen_log_diffs(approx, exact)
    return _merge(applicable, lower_ok, upper)


def batch_cor(p, a, b, case: Case):
    """Returns (codes, d, s, conforming, zero)."""
    gx, gy = COR_REGION[case]
    if case is Case.SEVEN_THREE:
        d = 7 * a + 3 * b
        s = 5 * np.abs(7 * a - 3 * b + 4)
        upper_ok = 1000 * d <= 21 * p - 7900
    else:
        d = a + b
        s = 5 * np.abs(a - b)
        upper_ok = (90 * d <= p - 81) if case is Case.NINE_NINE else (10 * d <= p - 1)
    t = 5 * d + DISC_OFFSET[case]
    ok = (t >= 0) & (t * t >= DISC_SCALE[case] * p) & upper_ok
    codes = _codes((a >= gx) & (b >= gy), ok)
    conforming, zero = batch_form_conforming(s, d)
    return codes, d, s, conforming, zero


def batch_form_conforming(s, d):
    """Vectorized ``form_classify(s, parity(d)).conforming`` plus the zero flag."""
    zero = s == 0
    rest = np.where(zero, 1, s)
    has5 = rest % 5 == 0
    for _ in range(64):
        div = (rest % 5 == 0) & (rest > 0)
        if not div.any():
            break
        rest = np.where(div, rest // 5, rest)
    even = d % 2 == 0
    pow2 = (rest >= 2) & ((rest & (rest - 1)) == 0)
    odd_ok = rest % 2 == 1
    conforming = has5 & ~zero & np.where(even, pow2, odd_ok)
    return conforming, zero


def batch_th3(p, a, b):
    """Th3Lower and Th3Ratio codes plus the strict lower-bound flag A/X0 > 1.

    With V = 10b + 3:  A/X0 = 10 A V / (p + 3 V).
    """
    V = 10 * b + 3
    A = a + 1
    num = 10 * A * V
    den = p + 3 * V
    strict_lower = num > den
    hi1 = (num * 100 * p < 101 * (p + 10) * den)
    constructible = p > 7 * V
    c1 = _codes(constructible & (A >= 31), strict_lower & hi1)
    lo2 = 11 * p * num > 10 * (p + 10) * den
    hi2 = 100 * p * num < 101 * (p + 10) * den
    # X0 = (p + 3V) / (10V) >= 33/10  <=>  10 (p + 3V) >= 330 V
    c2 = _codes(constructible & (10 * den >= 330 * V), lo2 & hi2)
    return c1, c2, strict_lower, constructible
