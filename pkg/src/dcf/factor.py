"""Three independent routes to the digit-class representations of p.

* trial division (the ground-truth oracle),
* a Fermat-style scan over the linear parameter ``d`` with a perfect-square
  discriminant test,
* the lambda parametrization of the (10x+7)(10y+3) family.

Each route has a per-``p`` form, which follows the contract literally, and a
``*_range`` form that produces the same sets for every ``p`` in an interval at
once (numpy, used by the sweeps).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .numeric import Case, Representation, ceil_sqrt, is_perfect_square, isqrt_array

# (5d + offset)^2 - scale * p = s^2
DISC_OFFSET = {Case.SEVEN_THREE: 29, Case.NINE_NINE: 9, Case.ONE_ONE: 1}
DISC_SCALE = {Case.SEVEN_THREE: 21, Case.NINE_NINE: 1, Case.ONE_ONE: 1}


class DRange(enum.Enum):
    PAPER = "paper"
    SOUND = "sound"


class Parity(enum.Enum):
    EVEN = "even"
    ODD = "odd"


def _require_ends_in_one(p: int) -> None:
    if p < 1 or p % 10 != 1:
        raise ValueError(f"p = {p} must be a natural number ending in 1")


def _make(p: int, case: Case, a: int, b: int) -> Representation:
    return Representation(p, case, a, b)


# -- oracle -----------------------------------------------------------------

def oracle_representations(p: int, case: Case) -> frozenset[Representation]:
    """Every (a, b) with (10a+m)(10b+n) = p, by trial division up to sqrt(p).

    For the symmetric families only a <= b is returned.
    """
    _require_ends_in_one(p)
    m, n = case.m, case.n
    reps = set()
    for f in range(1, math.isqrt(p) + 1):
        if p % f:
            continue
        g = p // f
        for u, v in ((f, g), (g, f)):
            if u % 10 == m and v % 10 == n:
                a, b = (u - m) // 10, (v - n) // 10
                if case.symmetric and a > b:
                    continue
                reps.add(_make(p, case, a, b))
    return frozenset(reps)


# -- d-search ---------------------------------------------------------------

def d_bounds(p: int, case: Case, mode: DRange = DRange.SOUND) -> tuple[int, int]:
    """Closed integer interval of d to scan; ``lo > hi`` means empty.

    The lower end (shared by both modes) is the smallest d with a
    nonnegative discriminant, i.e. ``(5d + offset)^2 >= scale * p``.
    """
    _require_ends_in_one(p)
    offset, scale = DISC_OFFSET[case], DISC_SCALE[case]
    lo = max(0, -(-(ceil_sqrt(scale * p) - offset) // 5))
    if case is Case.SEVEN_THREE:
        if mode is DRange.PAPER:
            hi = math.floor(Fraction(21 * p, 1000) - Fraction(79, 10))
        else:
            hi = (7 * p - 147) // 30
    elif case is Case.NINE_NINE:
        hi = (p - 81) // 90
    else:
        hi = (p - 1) // 10
    return lo, hi


@dataclass(frozen=True)
class Form:
    """Classification of a discriminant root against the power forms.

    ``kind`` is "power" (s = 5^k 2^j, or s = 5^k tau^j with tau odd),
    "nonconforming", or "zero" (s = 0, the symmetric square case).
    """

    kind: str
    k: Optional[int] = None
    j: Optional[int] = None
    tau: Optional[int] = None

    @property
    def conforming(self) -> bool:
        return self.kind == "power"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k": self.k, "j": self.j, "tau": self.tau}


def _valuation(s: int, q: int) -> tuple[int, int]:
    k = 0
    while s % q == 0:
        s //= q
        k += 1
    return k, s


def _max_perfect_power(r: int) -> tuple[int, int]:
    """(tau, j) with r = tau**j and j maximal (r >= 2)."""
    for j in range(r.bit_length(), 1, -1):
        tau = round(r ** (1.0 / j))
        for t in (tau - 1, tau, tau + 1):
            if t >= 2 and t**j == r:
                return t, j
    return r, 1


def form_classify(s: int, parity: Parity) -> Form:
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0:
        return Form("zero")
    k, rest = _valuation(s, 5)
    if k < 1:
        return Form("nonconforming")
    if parity is Parity.EVEN:
        j, rest = _valuation(rest, 2)
        if j >= 1 and rest == 1:
            return Form("power", k=k, j=j)
        return Form("nonconforming")
    if rest % 2 == 0:
        return Form("nonconforming")
    if rest == 1:
        # 5^k alone: tau = 1 is the only odd base
        return Form("power", k=k, j=1, tau=1)
    tau, j = _max_perfect_power(rest)
    return Form("power", k=k, j=j, tau=tau)


@dataclass(frozen=True)
class DSearchWitness:
    d: int
    s: int
    rep: Representation
    form: Form

    def __post_init__(self):
        x, y, p, case = self.rep.a, self.rep.b, self.rep.p, self.rep.case
        if case is Case.SEVEN_THREE:
            assert self.d == 7 * x + 3 * y
            assert self.s == 5 * abs(7 * x - 3 * y + 4)
        else:
            assert self.d == x + y
            assert self.s == 5 * abs(x - y)
        offset, scale = DISC_OFFSET[case], DISC_SCALE[case]
        assert (5 * self.d + offset) ** 2 - scale * p == self.s**2


def _branches(case: Case, d: int, s: int) -> list[tuple[int, int]]:
    """Nonnegative integer (x, y) reconstructed from both sign branches."""
    out = []
    for sign in (1, -1) if s else (1,):
        if case is Case.SEVEN_THREE:
            num = 5 * d - 20 + sign * s
            if num % 70:
                continue
            x = num // 70
            if (d - 7 * x) % 3:
                continue
            y = (d - 7 * x) // 3
        else:
            num = 5 * d + sign * s
            if num % 10:
                continue
            x = num // 10
            y = d - x
        if x >= 0 and y >= 0:
            out.append((x, y))
    return out


def _witness(p: int, case: Case, d: int, s: int, x: int, y: int) -> Optional[DSearchWitness]:
    if case.symmetric and x > y:
        return None
    if (10 * x + case.m) * (10 * y + case.n) != p:
        return None
    parity = Parity.EVEN if d % 2 == 0 else Parity.ODD
    return DSearchWitness(d, s, _make(p, case, x, y), form_classify(s, parity))


def dsearch_representations(p: int, case: Case, mode: DRange = DRange.SOUND,
                            block: int = 1 << 20) -> frozenset[DSearchWitness]:
    """Scan d over :func:`d_bounds` and keep exact perfect-square discriminants."""
    lo, hi = d_bounds(p, case, mode)
    if lo > hi:
        return frozenset()
    offset, scale = DISC_OFFSET[case], DISC_SCALE[case]
    candidates = []
    if (5 * hi + offset) ** 2 < 2**62:
        for start in range(lo, hi + 1, block):
            ds = np.arange(start, min(start + block, hi + 1), dtype=np.int64)
            t = 5 * ds + offset
            disc = t * t - scale * p
            roots = isqrt_array(disc)
            hits = np.flatnonzero(roots * roots == disc)
            candidates.extend((int(ds[i]), int(roots[i])) for i in hits)
    else:
        for d in range(lo, hi + 1):
            s = is_perfect_square((5 * d + offset) ** 2 - scale * p)
            if s is not None:
                candidates.append((d, s))
    out = set()
    for d, s in candidates:
        for x, y in _branches(case, d, s):
            w = _witness(p, case, d, s, x, y)
            if w is not None:
                out.add(w)
    return frozenset(out)


# -- lambda parametrization -------------------------------------------------

@dataclass(frozen=True)
class LambdaWitness:
    lam: int
    form_index: int
    rep: Representation


def _lambda_solution(p: int, lam: int, form_index: int) -> Optional[tuple[int, int]]:
    """(a, b) from the lambda formulas if both are exact naturals."""
    g = p - 10 * lam
    if g <= 0:
        return None
    if form_index == 1:
        num_a, den_a, num_b, den_b = p - 21 - 10 * lam, 30, 3 * lam, g
    else:
        num_a, den_a, num_b, den_b = 7 * lam, g, p - 21 - 10 * lam, 70
    if num_a < 0 or num_b < 0 or num_a % den_a or num_b % den_b:
        return None
    return num_a // den_a, num_b // den_b


def _divisors(n: int) -> list[int]:
    small = [f for f in range(1, math.isqrt(n) + 1) if n % f == 0]
    return sorted(set(small) | {n // f for f in small})


def lambda_representations(p: int, allow_zero: bool = True) -> frozenset[LambdaWitness]:
    """All (lambda, form) for which both formulas give exact naturals.

    Form 1 needs ``p - 10*lam`` to divide ``3*lam`` and hence ``3p``; form 2
    likewise divides ``7p``.  So the candidates are ``lam = (p - g)/10`` over
    the divisors ``g`` of ``3p`` and ``7p``.
    """
    _require_ends_in_one(p)
    out = set()
    for form_index, mult in ((1, 3), (2, 7)):
        for g in _divisors(mult * p):
            if g >= p + 1 or (p - g) % 10:
                continue
            lam = (p - g) // 10
            if lam == 0 and not allow_zero:
                continue
            sol = _lambda_solution(p, lam, form_index)
            if sol is not None:
                out.add(LambdaWitness(lam, form_index, _make(p, Case.SEVEN_THREE, *sol)))
    return frozenset(out)


def lambda_scan(p: int, allow_zero: bool = True) -> frozenset[LambdaWitness]:
    """Brute force over every lambda in [0, p/10); O(p), for cross-checks."""
    _require_ends_in_one(p)
    out = set()
    for lam in range(0 if allow_zero else 1, (p + 9) // 10):
        for form_index in (1, 2):
            sol = _lambda_solution(p, lam, form_index)
            if sol is not None:
                out.add(LambdaWitness(lam, form_index, _make(p, Case.SEVEN_THREE, *sol)))
    return frozenset(out)


# -- range forms ------------------------------------------------------------
#
# Each returns int64 column arrays sorted by (p, a, b) restricted to
# p in [lo, hi] with p % 10 == 1.  Values up to ~1e9 are safe in int64.

RANGE_SAFE = 10**9


def _check_range(lo: int, hi: int) -> None:
    if hi > RANGE_SAFE:
        raise OverflowError(f"range kernels are limited to p <= {RANGE_SAFE}")


def _sorted(cols: dict[str, list[np.ndarray]], keys=("p", "a", "b")) -> dict[str, np.ndarray]:
    merged = {k: (np.concatenate(v) if v else np.array([], dtype=np.int64)) for k, v in cols.items()}
    order = np.lexsort(tuple(merged[k] for k in reversed(keys)))
    return {k: v[order] for k, v in merged.items()}


def _cofactor_start(f: int, lo: int, lower: int, residue: int) -> int:
    q = max(lower, -(-lo // f))
    return q + (residue - q) % 10


def oracle_range(lo: int, hi: int, case: Case) -> dict[str, np.ndarray]:
    """Small-factor enumeration: every p = f*q in range with f <= q."""
    _check_range(lo, hi)
    lo = max(lo, 1)
    m, n = case.m, case.n
    cols: dict[str, list] = {"p": [], "a": [], "b": []}
    if hi < lo:
        return _sorted(cols)
    smalls = (m, n) if m != n else (m,)
    for f in range(1, math.isqrt(hi) + 1):
        r = f % 10
        if r not in smalls:
            continue
        q_res = n if r == m else m
        q = np.arange(_cofactor_start(f, lo, f, q_res), hi // f + 1, 10, dtype=np.int64)
        if not q.size:
            continue
        if r == m:
            a, b = np.full(q.size, (f - m) // 10, dtype=np.int64), (q - n) // 10
        else:
            a, b = (q - m) // 10, np.full(q.size, (f - n) // 10, dtype=np.int64)
        cols["p"].append(f * q)
        cols["a"].append(a)
        cols["b"].append(b)
    return _sorted(cols)


def dsearch_range(lo: int, hi: int, case: Case, mode: DRange = DRange.SOUND,
                  block: int = 1 << 16) -> dict[str, np.ndarray]:
    """Enumerate the (d, s) lattice with ``(5d+offset)^2 - s^2 = scale * p``.

    For each d, s runs over the integers whose discriminant lands in
    ``[scale*lo, scale*hi]``; each hit is reconstructed through both sign
    branches and kept only if it is an exact representation of a ``p`` whose
    own :func:`d_bounds` interval contains d.
    """
    _check_range(lo, hi)
    lo = max(lo, 1)
    cols: dict[str, list] = {k: [] for k in ("p", "a", "b", "d", "s")}
    if hi < lo:
        return _sorted(cols)
    offset, scale, m, n = DISC_OFFSET[case], DISC_SCALE[case], case.m, case.n
    hi1 = hi - (hi - 1) % 10
    if hi1 < 1:
        return _sorted(cols)
    d_lo = max(0, -(-(ceil_sqrt(scale * max(lo, 1)) - offset) // 5))
    d_hi = d_bounds(hi1, case, DRange.SOUND)[1]
    for start in range(d_lo, d_hi + 1, block):
        d = np.arange(start, min(start + block, d_hi + 1), dtype=np.int64)
        t = 5 * d + offset
        tt = t * t
        s_min = isqrt_array(np.maximum(tt - scale * hi, 0))
        s_min = np.where(s_min * s_min < tt - scale * hi, s_min + 1, s_min)
        top = tt - scale * lo
        ok = top >= 0
        s_max = np.where(ok, isqrt_array(np.maximum(top, 0)), -1)
        width = np.maximum(s_max - s_min + 1, 0)
        total = int(width.sum())
        if not total:
            continue
        rows = np.repeat(np.arange(d.size), width)
        first = np.cumsum(width) - width
        s = s_min[rows] + (np.arange(total) - first[rows])
        dd, tr = d[rows], t[rows]
        num = tr * tr - s * s
        keep = num % scale == 0
        dd, s, num = dd[keep], s[keep], num[keep]
        p = num // scale
        keep = p % 10 == 1
        dd, s, p = dd[keep], s[keep], p[keep]
        for sign in (1, -1):
            if case is Case.SEVEN_THREE:
                xn = 5 * dd - 20 + sign * s
                good = xn % 70 == 0
                x = xn // 70
                yn = dd - 7 * x
                good &= yn % 3 == 0
                y = yn // 3
            else:
                xn = 5 * dd + sign * s
                good = xn % 10 == 0
                x = xn // 10
                y = dd - x
            good &= (x >= 0) & (y >= 0)
            if sign == -1:
                good &= s > 0  # s = 0 gives the same point on both branches
            if case.symmetric:
                good &= x <= y
            good &= (10 * x + m) * (10 * y + n) == p
            pg, dg = p[good], dd[good]
            if mode is DRange.PAPER or case is Case.SEVEN_THREE:
                # the per-p upper end is the only bound not implied by x, y >= 0
                upper = _d_upper_vec(pg, case, mode)
                good_idx = dg <= upper
            else:
                good_idx = np.ones(pg.size, dtype=bool)
            cols["p"].append(pg[good_idx])
            cols["a"].append(x[good][good_idx])
            cols["b"].append(y[good][good_idx])
            cols["d"].append(dg[good_idx])
            cols["s"].append(s[good][good_idx])
    return _sorted(cols)


def _d_upper_vec(p: np.ndarray, case: Case, mode: DRange) -> np.ndarray:
    if case is Case.SEVEN_THREE:
        if mode is DRange.PAPER:
            return (21 * p - 7900) // 1000
        return (7 * p - 147) // 30
    if case is Case.NINE_NINE:
        return (p - 81) // 90
    return (p - 1) // 10


def lambda_range(lo: int, hi: int, allow_zero: bool = True) -> dict[str, np.ndarray]:
    """Lambda witnesses for every p in range, from divisor pairs g*h of 3p and 7p.

    ``lam = (p - g)/10``; both component formulas are then checked for
    exactness, exactly as in :func:`lambda_representations`.
    """
    _check_range(lo, hi)
    lo = max(lo, 1)
    cols: dict[str, list] = {k: [] for k in ("p", "a", "b", "lam", "form")}
    if hi < lo:
        return _sorted(cols, keys=("p", "a", "b", "form"))
    for form_index, mult in ((1, 3), (2, 7)):
        top = mult * hi
        for f in range(1, math.isqrt(top) + 1):
            if f % 2 == 0 or f % 5 == 0:
                continue
            # products g*h = mult*p with p = 1 (mod 10), so g*h = mult (mod 10)
            inv = pow(f, -1, 10)
            h_res = (mult * inv) % 10
            h = np.arange(_cofactor_start(f, mult * lo, f, h_res), top // f + 1, 10,
                          dtype=np.int64)
            if not h.size:
                continue
            prod = f * h
            keep = prod % mult == 0
            h, prod = h[keep], prod[keep]
            p = prod // mult
            for g in (np.full(h.size, f, dtype=np.int64), h):
                cand = (g <= p) & ((p - g) % 10 == 0)
                if g is h:
                    cand &= h != f  # a square product is already covered by g = f
                gp, pp = g[cand], p[cand]
                lam = (pp - gp) // 10
                rest = pp - 21 - 10 * lam
                if form_index == 1:
                    num_a, den_a, num_b, den_b = rest, 30, 3 * lam, gp
                else:
                    num_a, den_a, num_b, den_b = 7 * lam, gp, rest, 70
                ok = (num_a >= 0) & (num_b >= 0) & (num_a % den_a == 0) & (num_b % den_b == 0)
                if not allow_zero:
                    ok &= lam > 0
                cols["p"].append(pp[ok])
                cols["a"].append((num_a // den_a)[ok])
                cols["b"].append((num_b // den_b)[ok])
                cols["lam"].append(lam[ok])
                cols["form"].append(np.full(int(ok.sum()), form_index, dtype=np.int64))
    return _sorted(cols, keys=("p", "a", "b", "form"))
