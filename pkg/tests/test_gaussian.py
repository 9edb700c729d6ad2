import csv
import io
import math
from fractions import Fraction

import numpy as np
import pytest

from permfree.gaussian import (
    CSV_COLUMNS,
    MomentEstimate,
    convergence_study,
    mc_moment,
    mc_moments,
    mc_trace_samples,
    realize_factor,
    sample_gaussian,
    sample_stream,
    study_to_csv,
)
from permfree.perms import apply_to_matrix
from permfree.wick import exact_word_moment
from permfree.words import Factor, MomentWord, SchemeRegistry, WordError, constant_library, constant_matrix

SEED = 20240601


def word(spec):
    return MomentWord.parse(spec)


def test_samples_are_hermitian():
    reg = SchemeRegistry()
    gamma = reg["gamma"].build(16)
    for s in range(20):
        g = sample_gaussian(16, sample_stream(SEED, s)).entries
        np.testing.assert_array_equal(g, g.conj().T)
        assert np.all(np.diag(g).imag == 0)
        gg = apply_to_matrix(g, gamma)
        np.testing.assert_array_equal(gg, gg.conj().T)


def test_sampling_is_deterministic():
    a = sample_gaussian(8, sample_stream(SEED, 3)).entries
    b = sample_gaussian(8, sample_stream(SEED, 3)).entries
    c = sample_gaussian(8, sample_stream(SEED, 4)).entries
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ValueError):
        sample_stream(-1, 0)
    with pytest.raises(ValueError):
        sample_gaussian(0, sample_stream(SEED, 0))


def test_calibration():
    n = 8
    off = ~np.eye(n, dtype=bool)
    pair, square = [], []
    for s in range(1600):  # 1600 * 56 off-diagonal entries > 10^5
        g = sample_gaussian(n, sample_stream(7, s)).entries
        pair.append((g * g.T)[off])  # g_ij g_ji
        square.append((g * g)[off])  # g_ij^2
    pair = np.concatenate(pair)
    square = np.concatenate(square)
    se = pair.real.std(ddof=1) / math.sqrt(pair.size)
    assert abs(pair.real.mean() - 1 / n) <= 5 * se
    for part in (square.real, square.imag):
        assert abs(part.mean()) <= 5 * part.std(ddof=1) / math.sqrt(part.size)


def test_realize_factor():
    reg = SchemeRegistry()
    g = sample_gaussian(4, sample_stream(SEED, 0)).entries
    np.testing.assert_array_equal(realize_factor(Factor("id", False), g, reg), g)
    np.testing.assert_array_equal(realize_factor(Factor("id", True), g, reg), g)
    blocks = realize_factor(Factor("gamma", False), g, reg)
    for bi in (0, 2):
        for bj in (0, 2):
            np.testing.assert_array_equal(blocks[bi:bi + 2, bj:bj + 2], g[bi:bi + 2, bj:bj + 2].T)
    np.testing.assert_array_equal(realize_factor(Factor("Z", False, True), g), constant_matrix("Z", 4))
    with pytest.raises(WordError):
        realize_factor(Factor("nope", False), g, reg)


def test_constant_library():
    lib = constant_library(4)
    np.testing.assert_array_equal(lib["Z"], [[1, 0, 2, 0], [0, 1, 0, 2], [0, 0, 1, 0], [0, 0, 0, 1]])
    np.testing.assert_array_equal(lib["T"], [[1, 0, -1, 0], [0, 1, 0, -1], [2, 0, -1, 0], [0, 2, 0, -1]])
    assert np.trace(lib["T"]) / 4 == 0
    assert np.trace(lib["Z"]) / 4 == 1
    assert set(constant_library(3)) == {"I"}
    with pytest.raises(WordError):
        constant_matrix("Z", 5)


def test_constants_in_words_match_dense_products():
    reg = SchemeRegistry()
    w = word("r41a,Z,r41a,T")
    vals = mc_trace_samples([w], 8, 3, SEED, reg)[:, 0]
    for s in range(3):
        g = sample_gaussian(8, sample_stream(SEED, s)).entries
        mats = [realize_factor(f, g, reg) for f in w.factors]
        dense = np.trace(mats[0] @ mats[1] @ mats[2] @ mats[3]) / 8
        assert vals[s] == pytest.approx(dense, abs=1e-12)


def test_worker_count_does_not_change_results():
    words = [word("id,gamma,id,gamma"), word("mix,mix*")]
    one = mc_trace_samples(words, 9, 40, SEED, workers=1)
    three = mc_trace_samples(words, 9, 40, SEED, workers=3)
    np.testing.assert_array_equal(one, three)
    a = mc_moment(words[0], 9, 40, SEED)
    b = mc_moment(words[0], 9, 40, SEED, workers=4)
    assert a == b


def test_estimate_fields():
    est = mc_moment(word("id,id"), 4, 50, SEED)
    vals = mc_trace_samples([word("id,id")], 4, 50, SEED)[:, 0]
    assert est.samples == 50 and est.seed == SEED and est.n == 4
    assert est.mean == pytest.approx(vals.mean())
    assert est.stderr_re == pytest.approx(vals.real.std(ddof=1) / math.sqrt(50))
    with pytest.raises(ValueError):
        mc_moment(word("id,id"), 4, 1, SEED)


def test_within():
    est = MomentEstimate(8, 100, complex(1.01, 0.001), 0.01, 0.001, 0)
    assert est.within(1.0)
    assert not est.within(1.1)
    assert est.within(1.1, floor=0.2)


def test_mc_matches_exact_gaussian_words():
    est = mc_moment(word("id,id"), 16, 10_000, SEED)
    assert est.within(1.0)
    est = mc_moment(word("id,id,id,id"), 8, 10_000, SEED)
    assert est.within(2 + 1 / 64)


@pytest.mark.parametrize("spec,n", [
    ("id,t", 5),
    ("id,id,t,t", 6),
    ("gamma,id,gamma,id", 4),
    ("mix,mix*,mix,mix*", 4),
    ("tensor:shift1/rev,id,tensor:shift1/rev*,id", 8),
    ("r42,r42*,id,r42,id,r42*", 6),
])
def test_mc_matches_exact_small_words(spec, n):
    reg = SchemeRegistry()
    w = word(spec)
    exact = float(exact_word_moment(w, n, reg).value)
    est = mc_moment(w, n, 10_000, SEED, reg)
    assert est.within(exact), (est, exact)


def test_convergence_study_and_csv():
    rows = convergence_study(word("id,id,id,id"), [4, 8], 200, SEED)
    assert [r.exact for r in rows] == [2 + Fraction(1, 16), 2 + Fraction(1, 64)]
    assert {r.prediction for r in rows} == {2}
    text = study_to_csv(rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert list(parsed[0]) == CSV_COLUMNS
    assert parsed[0]["exact"] == "33/16" and parsed[1]["N"] == "8"
    assert float(parsed[0]["mean_re"]) == rows[0].estimate.mean.real

    const = convergence_study(word("r41a,Z,r41a,T"), [8], 50, SEED)
    assert const[0].exact is None and const[0].prediction is None

    capped = convergence_study(word("id,id,id,id"), [8], 20, SEED, exact_budget=10)
    assert capped[0].exact is None
