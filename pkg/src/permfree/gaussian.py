"""Monte Carlo estimates of E o tr over Gaussian Hermitian matrices.

Each sample index owns a Philox stream keyed by the master seed with the
index in the top counter word, so results do not depend on how samples
are split across workers.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .pairings import free_limit_prediction
from .perms import EntryPermutation, apply_to_matrix, conjugate_by_t
from .words import (
    Factor,
    MomentWord,
    SchemeRegistry,
    WordError,
    constant_matrix,
    word_signature,
)


@dataclass(frozen=True)
class GaussianSample:
    n: int
    entries: np.ndarray


def sample_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for one sample index under a master seed."""
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


def sample_gaussian(n: int, rng: np.random.Generator) -> GaussianSample:
    """Hermitian G with E(g_ij g_kl) = delta_il delta_jk / N.

    Off-diagonal entries are (x + iy)/sqrt(2N), the diagonal is real with
    variance 1/N.
    """
    if n < 1:
        raise ValueError(f"side must be positive, got {n}")
    x = rng.standard_normal((n, n))
    y = rng.standard_normal((n, n))
    upper = np.triu((x + 1j * y) / math.sqrt(2 * n), 1)
    g = upper + upper.conj().T
    g[np.diag_indices(n)] = rng.standard_normal(n) / math.sqrt(n)
    return GaussianSample(n, g)


def realize_factor(
    factor: Factor,
    g: np.ndarray,
    registry: SchemeRegistry | None = None,
    perm: EntryPermutation | None = None,
) -> np.ndarray:
    """The matrix of one word factor for the shared sample ``g``."""
    n = g.shape[0]
    if factor.constant:
        return constant_matrix(factor.label, n)
    if perm is None:
        perm = (registry or SchemeRegistry()).get(factor.label).build(n)
    out = apply_to_matrix(g, perm)
    return out.conj().T if factor.star else out


class _CompiledWord:
    """Pre-resolved factors: flat gather indices or constant matrices."""

    def __init__(self, word: MomentWord, n: int, registry: SchemeRegistry):
        self.word = word
        self.n = n
        self.parts = []
        for f in word.factors:
            if f.constant:
                constant_matrix(f.label, n)  # validates label and side
                self.parts.append(("const", (f.label, n)))
            else:
                perm = registry.get(f.label).build(n)
                # (G^mu)* = G^(t mu t) for Hermitian G
                if f.star:
                    perm = conjugate_by_t(perm)
                self.parts.append(("perm", perm.flat))

    def trace(self, g: np.ndarray, cache: dict) -> complex:
        n = self.n
        flat_g = g.reshape(-1)
        parts = []
        for kind, obj in self.parts:
            if kind == "const":
                parts.append((kind, *obj))
                continue
            key = id(obj)
            if key not in cache:
                cache[key] = flat_g[obj].reshape(n, n)
            parts.append(("mat", cache[key]))
        if len(parts) == 1:
            return complex(np.trace(_dense(parts[0]))) / n
        # tr(L R) = sum(L * R^T); the split keeps dense matmuls at m - 2
        half = len(parts) // 2
        left = _product(parts[:half])
        right = _product(parts[half:])
        return complex(np.sum(left * right.T)) / n


def _dense(part) -> np.ndarray:
    return part[1] if part[0] == "mat" else constant_matrix(part[1], part[2])


def _product(parts) -> np.ndarray:
    acc = _dense(parts[0])
    for kind, obj, *rest in parts[1:]:
        if kind == "mat":
            acc = acc @ obj
        else:
            acc = _right_mul_const(acc, obj)
    return acc


def _right_mul_const(x: np.ndarray, label: str) -> np.ndarray:
    """x @ C for the block constants without a dense product."""
    if label == "I":
        return x
    h = x.shape[1] // 2
    left, right = x[:, :h], x[:, h:]
    if label == "Z":  # [[I, 2I], [0, I]]
        return np.hstack([left, 2 * left + right])
    if label == "T":  # [[I, -I], [2I, -I]]
        return np.hstack([left + 2 * right, -left - right])
    raise WordError(f"unknown constant {label!r}")


@dataclass
class MomentEstimate:
    n: int
    samples: int
    mean: complex
    stderr_re: float
    stderr_im: float
    seed: int
    word: str = ""

    def within(self, target: float, k: float = 5.0, floor: float = 0.0) -> bool:
        tol_re = max(k * self.stderr_re, floor)
        tol_im = max(k * self.stderr_im, floor)
        return abs(self.mean.real - target) <= tol_re and abs(self.mean.imag) <= tol_im


def _estimate(values: np.ndarray, n: int, seed: int, word: str) -> MomentEstimate:
    s = len(values)
    return MomentEstimate(
        n=n,
        samples=s,
        mean=complex(values.mean()),
        stderr_re=float(values.real.std(ddof=1) / math.sqrt(s)),
        stderr_im=float(values.imag.std(ddof=1) / math.sqrt(s)),
        seed=seed,
        word=word,
    )


def mc_trace_samples(
    words: Sequence[MomentWord],
    n: int,
    samples: int,
    seed: int,
    registry: SchemeRegistry | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Per-sample normalized traces, shape ``(samples, len(words))``.

    All words are evaluated on the same Gaussian sample at each index.
    """
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    registry = registry or SchemeRegistry()
    compiled = [_CompiledWord(w, n, registry) for w in words]
    out = np.empty((samples, len(words)), dtype=np.complex128)

    def work(lo: int, hi: int) -> None:
        for s in range(lo, hi):
            g = sample_gaussian(n, sample_stream(seed, s)).entries
            cache: dict = {}
            for w, cw in enumerate(compiled):
                out[s, w] = cw.trace(g, cache)

    workers = max(1, int(workers))
    if workers == 1:
        work(0, samples)
    else:
        bounds = np.linspace(0, samples, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda b: work(*b), zip(bounds[:-1], bounds[1:])))
    return out


def mc_moments(
    words: Sequence[MomentWord],
    n: int,
    samples: int,
    seed: int,
    registry: SchemeRegistry | None = None,
    workers: int = 1,
) -> list[MomentEstimate]:
    vals = mc_trace_samples(words, n, samples, seed, registry, workers)
    return [_estimate(vals[:, w], n, seed, str(word)) for w, word in enumerate(words)]


def mc_moment(
    word: MomentWord,
    n: int,
    samples: int,
    seed: int,
    registry: SchemeRegistry | None = None,
    workers: int = 1,
) -> MomentEstimate:
    """Sample mean of tr(word)/N with standard errors of both parts."""
    return mc_moments([word], n, samples, seed, registry, workers)[0]


@dataclass
class StudyRow:
    estimate: MomentEstimate | None
    exact: Fraction | None = None
    prediction: int | None = None


def convergence_study(
    word: MomentWord,
    grid: Sequence[int],
    samples: int,
    seed: int,
    registry: SchemeRegistry | None = None,
    workers: int = 1,
    exact_budget: int | None = None,
) -> list[StudyRow]:
    """Monte Carlo, exact (when affordable) and free-limit columns per side."""
    from .wick import DEFAULT_BUDGET, BudgetExceeded, exact_word_moment

    registry = registry or SchemeRegistry()
    budget = DEFAULT_BUDGET if exact_budget is None else exact_budget
    prediction = None
    if not word.has_constants:
        prediction = free_limit_prediction(word_signature(word, max(grid), registry))
    rows = []
    for n in grid:
        est = mc_moment(word, n, samples, seed, registry, workers)
        exact = None
        if not word.has_constants:
            try:
                exact = exact_word_moment(word, n, registry, budget).value
            except BudgetExceeded:
                exact = None
        rows.append(StudyRow(est, exact, prediction))
    return rows


CSV_COLUMNS = ["N", "samples", "mean_re", "mean_im", "stderr_re", "stderr_im", "exact", "prediction", "seed"]


def study_to_csv(rows: Sequence[StudyRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        e = r.estimate
        writer.writerow([
            e.n,
            e.samples,
            repr(e.mean.real),
            repr(e.mean.imag),
            repr(e.stderr_re),
            repr(e.stderr_im),
            "" if r.exact is None else f"{r.exact.numerator}/{r.exact.denominator}",
            "" if r.prediction is None else r.prediction,
            e.seed,
        ])
    return buf.getvalue()
