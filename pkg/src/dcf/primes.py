"""Segmented sieve, deterministic Miller-Rabin and last-digit transitions."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterator

import numpy as np

DEFAULT_MAX_LIMIT = 10**9
SEGMENT_ODDS = 2**20

DIGITS = (1, 3, 7, 9)
_DIGIT_INDEX = np.full(10, -1, dtype=np.int64)
_DIGIT_INDEX[list(DIGITS)] = np.arange(4)


class LimitExceeded(Exception):
    """A requested sieve or sweep limit exceeds the configured ceiling."""


def max_limit() -> int:
    env = os.environ.get("DCF_MAX_LIMIT")
    return int(env) if env else DEFAULT_MAX_LIMIT


def check_limit(limit: int, ceiling: int | None = None) -> None:
    ceiling = max_limit() if ceiling is None else ceiling
    if limit > ceiling:
        raise LimitExceeded(f"limit {limit} exceeds maximum {ceiling} (set DCF_MAX_LIMIT)")


def simple_sieve(limit: int) -> np.ndarray:
    """Plain (non-segmented) Eratosthenes; primes <= limit."""
    if limit < 2:
        return np.array([], dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for q in range(2, math.isqrt(limit) + 1):
        if flags[q]:
            flags[q * q::q] = False
    return np.flatnonzero(flags).astype(np.int64)


def _odd_segments(lo: int, base: np.ndarray, segment_odds: int,
                  hi: int | None = None) -> Iterator[np.ndarray]:
    """Yield odd primes in successive segments starting at odd ``lo``.

    ``base`` must contain every odd prime up to the square root of the
    largest value sieved; the caller guarantees that via ``hi``.
    """
    low = lo if lo % 2 else lo + 1
    span = 2 * segment_odds
    while hi is None or low <= hi:
        high = low + span if hi is None else min(low + span, hi + 1)
        count = (high - low + 1) // 2
        mask = np.ones(count, dtype=bool)
        top = low + 2 * (count - 1)
        for q in base:
            q = int(q)
            qq = q * q
            if qq > top:
                break
            start = max(qq, -(-low // q) * q)
            if start % 2 == 0:
                start += q
            if start > top:
                continue
            mask[(start - low) // 2::q] = False
        if low == 1:
            mask[0] = False
        yield low + 2 * np.flatnonzero(mask).astype(np.int64)
        low += 2 * count


def primes_between(lo: int, hi: int, segment_odds: int = SEGMENT_ODDS) -> np.ndarray:
    """All primes in ``[lo, hi]`` by segmented sieve."""
    if hi < 2 or hi < lo:
        return np.array([], dtype=np.int64)
    base = simple_sieve(math.isqrt(hi))[1:]
    parts = [np.array([2], dtype=np.int64)] if lo <= 2 <= hi else []
    parts.extend(_odd_segments(max(lo, 3), base, segment_odds, hi))
    return np.concatenate(parts) if parts else np.array([], dtype=np.int64)


def sieve_primes(limit: int, segment_odds: int = SEGMENT_ODDS,
                 ceiling: int | None = None) -> np.ndarray:
    """All primes ``<= limit``; memory is O(sqrt(limit) + segment)."""
    if limit < 2:
        raise ValueError("sieve_primes needs limit >= 2")
    check_limit(limit, ceiling)
    return primes_between(2, limit, segment_odds)


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic for n < 3.3e24 (first twelve primes as witnesses)."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class TransitionMatrix:
    counts: np.ndarray  # 4x4, rows = source digit, columns = next digit
    total: int
    primes: int
    last_prime: int

    def __post_init__(self):
        assert self.counts.shape == (4, 4)
        assert int(self.counts.sum()) == self.total

    def frequencies(self) -> np.ndarray:
        rows = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(rows > 0, self.counts / np.maximum(rows, 1), 0.0)

    def frequency(self, src: int, dst: int) -> float:
        return float(self.frequencies()[DIGITS.index(src), DIGITS.index(dst)])

    def count(self, src: int, dst: int) -> int:
        return int(self.counts[DIGITS.index(src), DIGITS.index(dst)])


def transition_matrix(prime_count: int, segment_odds: int = SEGMENT_ODDS,
                      ceiling: int | None = None) -> TransitionMatrix:
    """Last-digit transitions over the first ``prime_count`` primes above 5."""
    if prime_count < 2:
        raise ValueError("need at least two primes")
    ceiling = max_limit() if ceiling is None else ceiling
    # Rosser's bound p_n < n(ln n + ln ln n) for n >= 6, with slack for skipping 2, 3, 5
    n = prime_count + 3
    bound = int(n * (math.log(n) + math.log(math.log(n)))) + 100 if n >= 6 else 100
    if bound > ceiling:
        raise LimitExceeded(f"needed sieve limit ~{bound} exceeds maximum {ceiling}")
    return _transitions(bound, prime_count, segment_odds)


def transition_matrix_upto(limit: int, segment_odds: int = SEGMENT_ODDS,
                           ceiling: int | None = None) -> TransitionMatrix:
    """Last-digit transitions over all primes in (5, limit]."""
    check_limit(limit, ceiling)
    return _transitions(limit, None, segment_odds)


def _transitions(bound: int, prime_count: int | None, segment_odds: int) -> TransitionMatrix:
    base = simple_sieve(math.isqrt(bound) + 1)[1:]
    counts = np.zeros(16, dtype=np.int64)
    seen = 0
    prev_digit = -1
    last = 0
    for seg in _odd_segments(7, base, segment_odds, bound):
        if prime_count is not None:
            seg = seg[: prime_count - seen]
        if not seg.size:
            continue
        idx = _DIGIT_INDEX[seg % 10]
        assert (idx >= 0).all(), "prime above 5 with last digit outside {1,3,7,9}"
        if prev_digit >= 0:
            counts[prev_digit * 4 + idx[0]] += 1
        counts += np.bincount(idx[:-1] * 4 + idx[1:], minlength=16)
        prev_digit = int(idx[-1])
        seen += seg.size
        last = int(seg[-1])
        if seen == prime_count:
            break
    if prime_count is not None and seen < prime_count:
        raise LimitExceeded(f"sieve bound {bound} produced only {seen} primes")
    if seen < 2:
        raise ValueError("fewer than two primes above 5 in range")
    return TransitionMatrix(counts.reshape(4, 4), seen - 1, seen, last)
