"""Exact integer/rational primitives and the certified log-domain comparator.

Everything here is a pure function of its inputs.  Rational quantities are
``fractions.Fraction`` (always in lowest terms, compared by
cross-multiplication of Python integers, so nothing overflows).
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import mpmath
import numpy as np

ExactRatio = Fraction

#: margin below which a log-domain comparison is reported as Borderline
LOG_MARGIN = 1e-12
#: working precision (decimal digits) of the log comparator; well above double-double
LOG_DPS = 40
#: float64 pre-screen threshold used by the batch comparator
SCREEN_MARGIN = 1e-9


class Case(enum.Enum):
    """The three digit-class families whose products end in 1."""

    SEVEN_THREE = "73"
    NINE_NINE = "99"
    ONE_ONE = "11"

    @property
    def m(self) -> int:
        return int(self.value[0])

    @property
    def n(self) -> int:
        return int(self.value[1])

    @property
    def symmetric(self) -> bool:
        return self.m == self.n

    @property
    def index(self) -> int:
        return _CASE_ORDER.index(self)

    @classmethod
    def parse(cls, text: str) -> "Case":
        try:
            return cls(str(text))
        except ValueError:
            raise ValueError(f"unknown case {text!r}; expected one of 73, 99, 11") from None


_CASE_ORDER = (Case.SEVEN_THREE, Case.NINE_NINE, Case.ONE_ONE)
ALL_CASES = _CASE_ORDER


@dataclass(frozen=True, order=True)
class Representation:
    """One solution ``p = (10a + m)(10b + n)`` of a residue case."""

    p: int
    case: Case
    a: int
    b: int

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError(f"negative component in {self}")
        if self.p % 10 != 1:
            raise ValueError(f"p = {self.p} does not end in 1")
        if (10 * self.a + self.case.m) * (10 * self.b + self.case.n) != self.p:
            raise ValueError(
                f"({10 * self.a + self.case.m})({10 * self.b + self.case.n}) != {self.p}")

    @property
    def A(self) -> int:
        return self.a + 1

    @property
    def B(self) -> int:
        return self.b + 1

    @property
    def factors(self) -> tuple[int, int]:
        return 10 * self.a + self.case.m, 10 * self.b + self.case.n


class Outcome(enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    NOT_APPLICABLE = "na"
    BORDERLINE = "borderline"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    margin: Optional[float] = None

    @classmethod
    def of(cls, ok: bool) -> "Verdict":
        return cls(Outcome.PASS if ok else Outcome.FAIL)


def isqrt(n: int) -> int:
    """Largest r with r*r <= n."""
    return math.isqrt(n)


def is_perfect_square(n: int) -> Optional[int]:
    """Return the root of ``n`` if it is a perfect square, else None."""
    if n < 0:
        return None
    r = math.isqrt(n)
    return r if r * r == n else None


def ceil_sqrt(n: int) -> int:
    """Smallest r >= 0 with r*r >= n."""
    if n <= 0:
        return 0
    r = math.isqrt(n)
    return r if r * r == n else r + 1


def compare_exact(lhs: Fraction, rhs: Fraction) -> int:
    """-1, 0 or 1 as ``lhs`` is less than, equal to or greater than ``rhs``."""
    lhs, rhs = Fraction(lhs), Fraction(rhs)
    left = lhs.numerator * rhs.denominator
    right = rhs.numerator * lhs.denominator
    return (left > right) - (left < right)


# -- log-domain expressions ------------------------------------------------

@dataclass(frozen=True)
class LogTerm:
    """``coef``, ``coef * ln(arg)`` or ``coef * sqrt(arg) / arg``."""

    kind: str  # "const" | "ln" | "sqrt_over"
    coef: Fraction
    arg: Optional[Fraction] = None

    @functools.lru_cache(maxsize=1 << 16)
    def evaluate(self, dps: int = LOG_DPS):
        # terms repeat across the representations of one p; mpf values are immutable
        with mpmath.workdps(dps):
            c = mpmath.mpf(self.coef.numerator) / self.coef.denominator
            if self.kind == "const":
                return c
            q = mpmath.mpf(self.arg.numerator) / self.arg.denominator
            if self.kind == "ln":
                return c * mpmath.log(q)
            if self.kind == "sqrt_over":
                return c * mpmath.sqrt(q) / q
        raise ValueError(f"unknown term kind {self.kind!r}")


def const(c) -> LogTerm:
    return LogTerm("const", Fraction(c))


def ln_of(coef, q) -> LogTerm:
    q = Fraction(q)
    if q <= 0:
        raise ValueError("logarithm of a non-positive ratio")
    return LogTerm("ln", Fraction(coef), q)


def sqrt_over(coef, p) -> LogTerm:
    p = Fraction(p)
    if p <= 0:
        raise ValueError("sqrt_over needs a positive argument")
    return LogTerm("sqrt_over", Fraction(coef), p)


LogExpr = Sequence[LogTerm]


def evaluate_log_expr(expr: Iterable[LogTerm], dps: int = LOG_DPS):
    with mpmath.workdps(dps):
        return mpmath.fsum(term.evaluate(dps) for term in expr)


def log_difference(lhs: Fraction, rhs_log: LogExpr, power: Fraction = Fraction(1),
                   dps: int = LOG_DPS):
    """``rhs_log - power * ln(lhs)`` as an mpf at ``dps`` digits."""
    lhs = Fraction(lhs)
    if lhs <= 0:
        raise ValueError(f"log comparison needs lhs > 0, got {lhs}")
    power = Fraction(power)
    with mpmath.workdps(dps):
        ln_lhs = mpmath.log(mpmath.mpf(lhs.numerator)) - mpmath.log(mpmath.mpf(lhs.denominator))
        scaled = ln_lhs * power.numerator / power.denominator
        return evaluate_log_expr(rhs_log, dps) - scaled


def compare_log_bound(lhs: Fraction, rhs_log: LogExpr, power: Fraction = Fraction(1),
                      margin: float = LOG_MARGIN) -> Verdict:
    """Decide ``lhs**power <= exp(rhs_log)``.

    Pass/Fail when the log-domain difference clears ``margin``; Borderline
    (carrying the magnitude of the difference) otherwise.
    """
    diff = log_difference(lhs, rhs_log, power)
    if diff > margin:
        return Verdict(Outcome.PASS)
    if diff < -margin:
        return Verdict(Outcome.FAIL)
    return Verdict(Outcome.BORDERLINE, float(abs(diff)))


def screen_log_diffs(approx_diff: np.ndarray, exact_fallback) -> np.ndarray:
    """Batch companion of :func:`compare_log_bound`.

    ``approx_diff`` holds float64 estimates of ``rhs - ln(lhs)``.  Entries whose
    magnitude exceeds :data:`SCREEN_MARGIN` (many orders above float64 error for
    the quantities in this package) are decided directly; the rest are handed
    to ``exact_fallback(i) -> Verdict``.  Returns an array of Outcome values.
    """
    out = np.where(approx_diff > 0, Outcome.PASS, Outcome.FAIL).astype(object)
    for i in np.flatnonzero(np.abs(approx_diff) <= SCREEN_MARGIN):
        out[i] = exact_fallback(int(i)).outcome
    return out


# -- vector helpers --------------------------------------------------------

#: above this magnitude numpy int64 products could overflow; use object arrays
INT64_SAFE = 10**8


def int_array(values, bound: int) -> np.ndarray:
    """int64 array when ``bound`` is small enough for the kernels, else Python ints."""
    if bound <= INT64_SAFE:
        return np.asarray(values, dtype=np.int64)
    return np.asarray([int(v) for v in values], dtype=object)


def isqrt_array(values: np.ndarray) -> np.ndarray:
    """Elementwise floor square root of a nonnegative int64 array (< 2**62)."""
    values = np.asarray(values, dtype=np.int64)
    if values.size and values.max() >= 2**62:
        raise OverflowError("isqrt_array limited to values < 2**62")
    r = np.sqrt(values.astype(np.float64)).astype(np.int64)
    for _ in range(2):
        r = np.where(r * r > values, r - 1, r)
        r = np.where((r + 1) * (r + 1) <= values, r + 1, r)
    return r


def render(value: Union[Fraction, int, str]) -> str:
    if isinstance(value, str):
        return value
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def render_approx(x, digits: int = 20) -> str:
    return mpmath.nstr(x, digits)
