import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracles import random_entry_perm, rng, tuple_count_brute
from permfree.conditions import j_statistic
from permfree.pairings import PairPartition, is_noncrossing, iter_pairings
from permfree.perms import InadmissibleSizeError, PermutationError, conjugate_by_t, identity_perm, transpose_perm
from permfree.wick import (
    BudgetExceeded,
    V_exact,
    asymptotic_check,
    exact_cost,
    exact_moment,
    exact_word_moment,
    max_exact_side,
    search_cost,
    tuple_count,
    tuple_count_naive,
)
from permfree.words import MomentWord, SchemeRegistry, WordError, word_to_perms

P12 = PairPartition.from_blocks([(1, 2)])
P13_24 = PairPartition.from_blocks([(1, 3), (2, 4)])
P12_34 = PairPartition.from_blocks([(1, 2), (3, 4)])


def ids(n, m):
    return [identity_perm(n)] * m


# -- tuple_count / V ---------------------------------------------------------------


def test_tuple_count_examples():
    assert tuple_count(P12, ids(3, 2)) == 9
    assert tuple_count(P13_24, ids(4, 4)) == 4
    assert tuple_count(P12, [identity_perm(3), transpose_perm(3)]) == 3


def test_tuple_count_errors():
    with pytest.raises(PermutationError):
        tuple_count(P12, ids(3, 3))
    with pytest.raises(PermutationError):
        tuple_count(P12, [identity_perm(3), identity_perm(2)])
    with pytest.raises(PermutationError):
        tuple_count(P12, ids(3, 2), n=4)


def test_tuple_count_matches_brute_force_small():
    r = rng(12)
    for m in (2, 4):
        for n in (1, 2, 3):
            for _ in range(4):
                perms = [random_entry_perm(n, r) for _ in range(m)]
                for pi in iter_pairings(m):
                    brute = tuple_count_brute(pi.blocks(), perms)
                    assert tuple_count(pi, perms) == brute
                    assert tuple_count_naive(pi, perms) == brute


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(0, 2**32 - 1))
def test_tuple_count_matches_naive_m6(n, seed):
    r = rng(seed)
    perms = [random_entry_perm(n, r) for _ in range(6)]
    pis = list(iter_pairings(6))
    pi = pis[r.randrange(len(pis))]
    count = tuple_count(pi, perms)
    assert count == tuple_count_naive(pi, perms)
    assert 0 <= count <= n**6


def test_V_examples():
    r = rng(2)
    s2 = random_entry_perm(4, r)
    assert V_exact(P12, [conjugate_by_t(s2), s2]) == 1
    assert V_exact(P13_24, ids(5, 4)) == Fraction(1, 25)
    assert V_exact(P12_34, ids(3, 4)) == 1


# -- exact moments -----------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 8])
def test_gaussian_moments(n):
    assert exact_moment(ids(n, 2)).value == 1
    assert exact_moment(ids(n, 4)).value == 2 + Fraction(1, n * n)


def test_exact_moment_examples():
    assert exact_moment(ids(2, 4)).value == Fraction(9, 4)
    assert exact_moment([identity_perm(3), transpose_perm(3)]).value == Fraction(1, 3)
    res = exact_moment(ids(3, 3))
    assert res.value == 0 and res.per_pairing == []


def test_exact_moment_breakdown_and_json():
    res = exact_moment(ids(3, 4), word="id,id,id,id")
    assert sum(v for _, _, v in res.per_pairing) == res.value
    norm = 3 ** 3
    assert all(v == Fraction(c, norm) and 0 <= c <= 3**4 for _, c, v in res.per_pairing)
    payload = json.loads(json.dumps(res.to_dict()))
    assert payload["value"] == "19/9"
    assert payload["N"] == 3 and payload["m"] == 4
    assert [b for p in payload["per_pairing"] for b in p["blocks"]][:2] == [[1, 2], [3, 4]]
    assert {p["V"] for p in payload["per_pairing"]} == {"1/1", "1/9"}


def test_budget():
    with pytest.raises(BudgetExceeded) as info:
        exact_moment(ids(8, 6), budget=10)
    assert info.value.required == exact_cost(6, 8) > 10
    assert exact_cost(3, 8) == 0
    assert exact_cost(4, 5) == sum(search_cost(pi, 5) for pi in iter_pairings(4))
    side = max_exact_side(4, budget=10_000)
    assert exact_cost(4, side) <= 10_000 < exact_cost(4, side + 1)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 4, 6]), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_cyclic_invariance(m, n, seed):
    r = rng(seed)
    perms = [random_entry_perm(n, r) for _ in range(m)]
    base = exact_moment(perms).value
    for shift in range(1, m):
        assert exact_moment(perms[shift:] + perms[:shift]).value == base


def test_interval_block_reduction():
    r = rng(31)
    for _ in range(40):
        n = r.randint(1, 4)
        m = r.choice((4, 6))
        rest = [random_entry_perm(n, r) for _ in range(m - 2)]
        s2 = random_entry_perm(n, r)
        perms = [conjugate_by_t(s2), s2] + rest
        for sub in iter_pairings(m - 2):
            blocks = [(1, 2)] + [(a + 2, b + 2) for a, b in sub.blocks()]
            assert V_exact(PairPartition.from_blocks(blocks), perms) == V_exact(sub, rest)


def test_crossing_pairings_bounded_by_inverse_side():
    r = rng(41)
    for _ in range(60):
        n = r.randint(2, 4)
        m = r.choice((4, 6))
        perms = [random_entry_perm(n, r) for _ in range(m)]
        for pi in iter_pairings(m):
            if not is_noncrossing(pi):
                assert V_exact(pi, perms) <= Fraction(1, n)


def test_interval_block_bounded_by_j():
    r = rng(43)
    for _ in range(60):
        n = r.randint(2, 4)
        m = r.choice((4, 6))
        perms = [random_entry_perm(n, r) for _ in range(m)]
        for pi in iter_pairings(m):
            for k in range(m - 1):
                if pi.mate[k] == k + 1:
                    bound = Fraction(j_statistic(perms[k], perms[k + 1]), n * n)
                    assert V_exact(pi, perms) <= bound


def test_odd_words_vanish():
    r = rng(3)
    for m in (1, 3, 5):
        assert exact_moment([random_entry_perm(3, r) for _ in range(m)]).value == 0


# -- words -------------------------------------------------------------------------


def test_word_to_perms():
    reg = SchemeRegistry()
    mu = reg["mix"].build(4)
    a, b = word_to_perms(MomentWord.parse("mix,mix*"), 4, reg)
    assert a == mu and b == conjugate_by_t(mu)
    a, b = word_to_perms(MomentWord.parse("id,gamma"), 4, reg)
    assert a.is_identity() and b == reg["gamma"].build(4)
    with pytest.raises(WordError):
        word_to_perms(MomentWord.parse("id,Z,id,T"), 4, reg)


def test_word_parse_errors():
    with pytest.raises(WordError):
        MomentWord.parse("")
    with pytest.raises(WordError):
        MomentWord.parse("id,,id")
    with pytest.raises(WordError):
        SchemeRegistry().get("nope")


def test_exact_word_examples():
    assert exact_word_moment(MomentWord.parse("gamma,gamma"), 4).value == 1
    # tensor factor spec parses; mul<k> needs a unit mod N
    assert exact_word_moment(MomentWord.parse("tensor:shift1/rev,tensor:shift1/rev*"), 5).value == 1
    with pytest.raises(InadmissibleSizeError):
        exact_word_moment(MomentWord.parse("tensor:mul2/id,id"), 4)


# -- asymptotic check --------------------------------------------------------------


def test_asymptotic_g4():
    chk = asymptotic_check(MomentWord.parse("id,id,id,id"), [2, 4, 8])
    assert chk.prediction == 2
    assert [r.value for r in chk.rows] == [2 + Fraction(1, n * n) for n in (2, 4, 8)]
    assert chk.monotone()
    assert chk.gaps() == [1 / 4, 1 / 16, 1 / 64]
    assert json.loads(json.dumps(chk.to_dict()))["prediction"] == 2


def test_asymptotic_gamma_square():
    chk = asymptotic_check(MomentWord.parse("gamma,gamma"), [4])
    assert chk.prediction == 1 and chk.rows[0].value == 1


def test_asymptotic_remark42_word_tends_to_zero():
    chk = asymptotic_check(MomentWord.parse("id,r42,id,r42*"), [4, 8, 16])
    assert chk.prediction == 0
    assert chk.monotone()
    assert float(chk.rows[-1].value) < float(chk.rows[0].value)
