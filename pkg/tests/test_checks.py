import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcf import checks as ck
from dcf.factor import dsearch_representations, oracle_range, oracle_representations
from dcf.numeric import ALL_CASES, Case, Outcome, Representation
from dcf.primes import is_prime

S73, S99, S11 = Case.SEVEN_THREE, Case.NINE_NINE, Case.ONE_ONE
PASS, FAIL, NA = Outcome.PASS, Outcome.FAIL, Outcome.NOT_APPLICABLE


def rep(p, case, a, b):
    return Representation(p, case, a, b)


# -- Th1 / Obs2 -------------------------------------------------------------

@pytest.mark.parametrize("r, outcome, mid, rhs", [
    (rep(2701, S73, 3, 7), PASS, 32, Fraction(326821, 10000)),
    (rep(361, S99, 1, 1), PASS, 4, Fraction(43681, 10000)),
    (rep(8281, S11, 9, 9), PASS, 100, Fraction(1002001, 10000)),
])
def test_th1_examples(r, outcome, mid, rhs):
    c = ck.check_th1(r)
    assert (c.verdict.outcome, c.mid, c.rhs, c.exact) == (outcome, mid, rhs, True)
    assert c.lhs == Fraction(r.p, 100)


def test_th1_gate_1311():
    c = ck.check_th1(rep(1311, S73, 5, 2))
    assert c.verdict.outcome is NA and c.gate == "B = 3 < 8"
    assert c.mid == 18 and c.mid > Fraction(121 * 1311, 10**4)
    assert c.ungated is FAIL


@pytest.mark.parametrize("r, lo, hi", [
    (rep(21, S73, 0, 0), 0, 100),
    (rep(2701, S73, 3, 7), 2100, 3200),
    (rep(1311, S73, 5, 2), 1000, 1800),
])
def test_obs2_examples(r, lo, hi):
    c = ck.check_obs2(r)
    assert c.applicable and c.verdict.outcome is PASS
    assert (c.lhs, c.mid, c.rhs) == (lo, r.p, hi)


# -- Th2 --------------------------------------------------------------------

def test_th2_gate_731():
    c = ck.check_th2(ck.Th2Pair(rep(731, S73, 1, 4), rep(741, S73, 5, 1)))
    assert c.verdict.outcome is NA and c.gate == "A(p) = 2 < 31"
    assert c.ungated is FAIL
    assert float(c.mid) == pytest.approx(1.0018249, abs=1e-7)
    assert float(c.rhs) == pytest.approx(1.00033966, abs=1e-8)


def test_th2_no_pair_for_2701():
    assert is_prime(2711)
    assert not oracle_representations(2711, S73)


def test_th2_first_applicable_literal_pair():
    # located with the oracle: the smallest case-i p with A >= 31, B >= 71 for p and p + 10
    cols = oracle_range(1, 2 * 10**6, S73)
    reps = {}
    for p, a, b in zip(cols["p"].tolist(), cols["a"].tolist(), cols["b"].tolist()):
        if a + 1 >= 31 and b + 1 >= 71:
            reps.setdefault(p, []).append((a, b))
    first = min(p for p in reps if p + 10 in reps)
    pair = ck.Th2Pair(rep(first, S73, *reps[first][0]), rep(first + 10, S73, *reps[first + 10][0]))
    c = ck.check_th2(pair)
    assert c.applicable and c.verdict.outcome in (PASS, FAIL)
    # the record holds exactly what the independent recomputation gives
    ratio = Fraction(pair.rep_next.A * pair.rep_next.B, pair.rep_p.A * pair.rep_p.B)
    with mpmath.workdps(60):
        lhs = mpmath.log(mpmath.mpf(ratio.numerator) / ratio.denominator) / 100
        rhs = mpmath.mpf(201) / 10**6 + mpmath.mpf("0.010201") * mpmath.log(1 + mpmath.mpf(10) / first)
        want = PASS if (ratio >= 1 and lhs <= rhs) else FAIL
    assert c.verdict.outcome is want


def test_th2_gate_scope_flag():
    # 215831 = 7 * 30833: p is gated in, the paired rep (0, 3083) is not
    pair = ck.Th2Pair(rep(215821, S73, 30, 70), rep(215831, S73, 0, 3083))
    both = ck.check_th2(pair, gate_both=True)
    only_p = ck.check_th2(pair, gate_both=False)
    assert both.verdict.outcome is NA and both.gate == "A(p+10) = 1 < 31"
    assert only_p.applicable and only_p.verdict.outcome is FAIL  # A'B' < AB
    assert only_p.ungated is both.ungated


def test_th2_interior_examples():
    c = ck.check_th2_interior(rep(215821, S73, 30, 70))
    assert c.verdict.outcome is PASS and c.mid == 2201
    c = ck.check_th2_interior(rep(2701, S73, 3, 7))
    assert c.verdict.outcome is NA and c.gate == "A = 4 < 31"
    # boundary case iii: (90, 90) is 901^2 and AB = 8281 sits just under 8281.182001
    c = ck.check_th2_interior(rep(901**2, S11, 90, 90))
    assert c.applicable and c.verdict.outcome is PASS
    assert c.rhs == Fraction(8281182001, 10**6)
    # (10a + 1)^2 with a = 91 drifts the other way only if the ratio exceeds 1.0201
    c = ck.check_th2_interior(rep(911**2, S11, 91, 91))
    assert c.applicable and (c.mid <= c.rhs) == (c.verdict.outcome is PASS)


# -- Th3 --------------------------------------------------------------------

def test_th3_41_not_applicable():
    inst = ck.Th3Instance(41, 1, 0)
    assert (inst.x0, inst.X0, inst.A / inst.X0) == (Fraction(2, 3), Fraction(5, 3), Fraction(6, 5))
    lower, ratio = ck.check_th3(inst)
    assert lower.verdict.outcome is NA and lower.gate == "A = 2 < 31"
    assert ratio.verdict.outcome is NA and ratio.gate == "X0 = 5/3 < 33/10"


def test_th3_25471_both_pass():
    assert is_prime(25471) and 25481 == 307 * 83
    inst = ck.Th3Instance(25471, 30, 8)
    assert inst.X0 == Fraction(2572, 83) and inst.A / inst.X0 == Fraction(2573, 2572)
    lower, ratio = ck.check_th3(inst)
    assert lower.verdict.outcome is PASS and ratio.verdict.outcome is PASS
    assert lower.rhs == Fraction(25481 * 101, 25471 * 100)
    assert ratio.lhs == Fraction(10 * 25481, 11 * 25471)


def test_th3_nonpositive_x0_gate():
    # 11 + 10 = 21 = 7 * 3: x0 = (11/3 - 7)/10 < 0
    lower, ratio = ck.check_th3(ck.Th3Instance(11, 0, 0))
    assert lower.gate.startswith("x0 = ") and lower.gate.endswith("<= 0")
    assert ratio.verdict.outcome is NA


def test_th3_validation():
    with pytest.raises(ValueError):
        ck.Th3Instance(41, 0, 0)
    with pytest.raises(ValueError):
        ck.Th3Instance(2701 - 10, 3, 7)  # 2691 = 3 * 897 is composite


# -- Th4 --------------------------------------------------------------------

def test_th4_2701():
    a_branch, b_branch = ck.check_th4(rep(2701, S73, 3, 7))
    assert a_branch.applicable and a_branch.mid == 1 and a_branch.verdict.outcome is PASS
    assert b_branch.verdict.outcome is NA and b_branch.gate == "(10B - 7)^2 = 5329 > 2701"


def test_th4_b_equality_at_8():
    # any applicable B = 8 rep has mid exactly 1
    for p, a, b in [(73 * 10007, 1000, 7)]:
        r = rep(p, S73, a, b)
        _, b_branch = ck.check_th4(r)
        assert b_branch.mid == 1 and b_branch.applicable


def test_th4_gates_and_case():
    a_branch, _ = ck.check_th4(rep(21, S73, 0, 0))
    assert a_branch.gate == "A = 1 < 4"
    _, b_branch = ck.check_th4(rep(21, S73, 0, 0))
    assert b_branch.gate == "B = 1 < 8"
    with pytest.raises(ValueError):
        ck.check_th4(rep(361, S99, 1, 1))


# -- CorRange -------------------------------------------------------------

def test_cor_examples():
    (w,) = dsearch_representations(2701, S73)
    c = ck.check_cor_range(w)
    assert c.applicable and c.verdict.outcome is PASS
    assert float(c.lhs) == pytest.approx(41.83, abs=0.01) and c.rhs == Fraction(48821, 1000)
    w = next(w for w in dsearch_representations(1311, S73) if (w.rep.a, w.rep.b) == (5, 2))
    c = ck.check_cor_range(w)
    assert c.verdict.outcome is NA and c.gate == "y = 2 < 7"
    # region for case ii is x, y >= 2 as printed, so (1, 1) is gated out; the raw interval holds
    (w,) = dsearch_representations(361, S99)
    c = ck.check_cor_range(w)
    assert c.verdict.outcome is NA and c.gate == "x = 1 < 2" and c.ungated is PASS
    assert c.lhs == 2 and c.rhs == Fraction(280, 90)


def test_witness_from_rep_matches_search():
    for p in (2701, 4161, 1001, 361, 8281):
        for case in ALL_CASES:
            assert {ck.witness_from_rep(r) for r in oracle_representations(p, case)} == \
                set(dsearch_representations(p, case))


# -- batch kernels agree with the scalar checks -----------------------------

def _scalar_codes(case, p, a, b, fn):
    return np.array([ck.CODE_OF[fn(rep(int(x), case, int(y), int(z))).verdict.outcome]
                     for x, y, z in zip(p, a, b)], dtype=np.int8)


@pytest.mark.parametrize("case", ALL_CASES)
def test_batch_matches_scalar(case):
    cols = oracle_range(1, 400001, case)
    p, a, b = cols["p"], cols["a"], cols["b"]
    idx = np.random.default_rng(7).choice(p.size, size=min(1500, p.size), replace=False)
    p, a, b = p[idx], a[idx], b[idx]
    assert np.array_equal(ck.batch_th1(p, a, b, case), _scalar_codes(case, p, a, b, ck.check_th1))
    assert np.array_equal(ck.batch_obs2(p, a, b, case), _scalar_codes(case, p, a, b, ck.check_obs2))
    assert np.array_equal(ck.batch_th2_interior(p, a, b, case),
                          _scalar_codes(case, p, a, b, ck.check_th2_interior))
    codes, d, s, conforming, zero = ck.batch_cor(p, a, b, case)
    for i in range(p.size):
        w = ck.witness_from_rep(rep(int(p[i]), case, int(a[i]), int(b[i])))
        assert ck.CODE_OF[ck.check_cor_range(w).verdict.outcome] == codes[i]
        assert (w.d, w.s, w.form.conforming, w.form.kind == "zero") == \
            (d[i], s[i], conforming[i], zero[i])
    if case is S73:
        for branch, k in (("A", 0), ("B", 1)):
            want = [ck.CODE_OF[ck.check_th4(rep(int(x), case, int(y), int(z)))[k].verdict.outcome]
                    for x, y, z in zip(p, a, b)]
            assert ck.batch_th4(p, a, b, branch).tolist() == want


def test_batch_th3_matches_scalar():
    cols = oracle_range(11, 300011, S73)
    ps, a, b = cols["p"] - 10, cols["a"], cols["b"]
    keep = np.array([is_prime(int(x)) for x in ps])
    ps, a, b = ps[keep], a[keep], b[keep]
    c1, c2, strict, constructible = ck.batch_th3(ps, a, b)
    for i in range(ps.size):
        inst = ck.Th3Instance(int(ps[i]), int(a[i]), int(b[i]))
        first, second = ck.check_th3(inst)
        assert (ck.CODE_OF[first.verdict.outcome], ck.CODE_OF[second.verdict.outcome]) == (c1[i], c2[i])
        assert constructible[i] == inst.constructible
        if inst.constructible:
            assert strict[i] == (inst.A / inst.X0 > 1)


def test_batch_th2_matches_scalar():
    cols = oracle_range(1, 300001, S99)
    by_p = {}
    for p, a, b in zip(cols["p"].tolist(), cols["a"].tolist(), cols["b"].tolist()):
        by_p.setdefault(p, []).append((a, b))
    rows = [(p, r, q) for p in by_p if p + 10 in by_p for r in by_p[p] for q in by_p[p + 10]]
    assert rows
    arr = lambda xs: np.array(xs, dtype=np.int64)
    p = arr([x[0] for x in rows])
    a, b = arr([x[1][0] for x in rows]), arr([x[1][1] for x in rows])
    a2, b2 = arr([x[2][0] for x in rows]), arr([x[2][1] for x in rows])
    for gate_both in (True, False):
        codes = ck.batch_th2(p, a, b, p + 10, a2, b2, S99, gate_both=gate_both)
        for i, (pp, r, q) in enumerate(rows):
            c = ck.check_th2(ck.Th2Pair(rep(pp, S99, *r), rep(pp + 10, S99, *q)), gate_both)
            assert ck.CODE_OF[c.verdict.outcome] == codes[i]


# -- exactness and re-verification ------------------------------------------

def test_exact_sides_reproduce_independently():
    rng = random.Random(3)
    cols = oracle_range(1, 10**6, S73)
    for i in rng.sample(range(cols["p"].size), 1000):
        p, a, b = int(cols["p"][i]), int(cols["a"][i]), int(cols["b"][i])
        c = ck.check_th1(rep(p, S73, a, b))
        with mpmath.workdps(80):
            AB = mpmath.mpf((a + 1) * (b + 1))
            ok = mpmath.mpf(p) / 100 <= AB <= mpmath.mpf(121) * p / 10**4
        assert c.ungated is (PASS if ok else FAIL)


@pytest.mark.parametrize("make", [
    lambda: ck.check_th1(rep(1311, S73, 5, 2)),
    lambda: ck.check_obs2(rep(2701, S73, 3, 7)),
    lambda: ck.check_th2_interior(rep(901**2, S11, 90, 90)),
    lambda: ck.check_th2(ck.Th2Pair(rep(731, S73, 1, 4), rep(741, S73, 5, 1))),
    lambda: ck.check_th2(ck.Th2Pair(rep(731, S73, 1, 4), rep(741, S73, 5, 1)), gate_both=False),
    lambda: ck.check_th3(ck.Th3Instance(25471, 30, 8))[0],
    lambda: ck.check_th3(ck.Th3Instance(41, 1, 0))[1],
    lambda: ck.check_th4(rep(2701, S73, 3, 7))[1],
    lambda: ck.check_cor_range(next(iter(dsearch_representations(2701, S73)))),
])
def test_recheck_round_trip(make):
    c = make()
    rec = c.to_record()
    assert ck.recheck(rec).to_record() == rec


@given(st.integers(min_value=0, max_value=3000), st.integers(min_value=0, max_value=3000),
       st.sampled_from(ALL_CASES))
def test_obs2_always_holds(a, b, case):
    r = rep((10 * a + case.m) * (10 * b + case.n), case, a, b)
    assert ck.check_obs2(r).verdict.outcome is PASS


def test_record_schema_keys():
    rec = ck.check_th1(rep(2701, S73, 3, 7)).to_record()
    assert list(rec) == ["claim", "p", "case", "applicable", "gate", "verdict", "lhs", "mid",
                         "rhs", "exact", "witness"]
    big = ck.check_obs2(rep((10**9 + 7) * (10**9 + 3), S73, 10**8, 10**8)).to_record()
    assert isinstance(big["p"], str)
