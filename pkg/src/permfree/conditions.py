"""Counting statistics behind the freeness conditions and their growth fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .perms import (
    EntryPermutation,
    PermutationError,
    PermutationScheme,
    asymmetric_pairs,
    check_line_perm,
    conjugate_by_t,
)

SATISFIES = "satisfies"
VIOLATES = "violates"
INCONCLUSIVE = "inconclusive"

MARGIN = 0.25
VIOLATION_SLACK = 0.1


class CertificationError(ValueError):
    """Raised when a declared hypothesis is contradicted exactly, or the grid is unusable."""


def _same_side(a: EntryPermutation, b: EntryPermutation) -> int:
    if a.n != b.n:
        raise PermutationError(f"size mismatch: {a.n} vs {b.n}")
    return a.n


def j_statistic(sigma: EntryPermutation, tau: EntryPermutation) -> int:
    """#{(i,j,k) : sigma(i,j) = t o tau o t (k,j)}.

    For each (i, j) at most one k can match: the preimage of sigma(i, j)
    under t o tau o t must lie in column j.
    """
    n = _same_side(sigma, tau)
    pre = conjugate_by_t(tau).inverse_flat[sigma.flat]
    cols = np.tile(np.arange(n), n)
    return int(np.count_nonzero(pre % n == cols))


def c_statistic(phi: Sequence[int], psi: Sequence[int]) -> int:
    """Number of fixed points of phi^-1 psi, i.e. #{i : phi(i) = psi(i)}."""
    if len(phi) != len(psi):
        raise PermutationError(f"size mismatch: {len(phi)} vs {len(psi)}")
    n = len(phi)
    phi = check_line_perm(phi, n)
    psi = check_line_perm(psi, n)
    return sum(1 for a, b in zip(phi, psi) if a == b)


def _membership(mu_a: EntryPermutation, mu_b: EntryPermutation, shapes: Sequence[str], conj: Sequence[bool]):
    """For each (i, j), the k solving mu_a(i,j) = m(i,k) or m(k,j), or -1.

    Returns an array of shape (len(shapes), n*n).
    """
    n = _same_side(mu_a, mu_b)
    i, j = np.divmod(np.arange(n * n), n)
    mb = mu_b
    mbc = conjugate_by_t(mu_b)
    rows = []
    for shape, c in zip(shapes, conj):
        pre = (mbc if c else mb).inverse_flat[mu_a.flat]
        r, s = np.divmod(pre, n)
        if shape == "ik":  # m(i, k): first coordinate must be i
            rows.append(np.where(r == i, s, -1))
        else:  # m(k, j): second coordinate must be j
            rows.append(np.where(s == j, r, -1))
    return np.array(rows)


_COND_II = (("ik", "kj", "ik", "kj"), (False, False, True, True))


def condition_ii_count(mu_a: EntryPermutation, mu_b: EntryPermutation, distinct: bool = False) -> int:
    """Count of (i,j,k) with mu_a(i,j) in {mu_b(i,k), mu_b(k,j), t mu_b t(i,k), t mu_b t(k,j)}.

    By default a triple is counted once for every set element it matches,
    which is the quantity equal to half the sum of the eight j-terms (see
    :func:`condition_ii_decomposition`).  ``distinct=True`` counts each
    triple once.  The two differ by at most a factor of 4.
    """
    ks = _membership(mu_a, mu_b, *_COND_II)
    if not distinct:
        return int(np.count_nonzero(ks >= 0))
    return _distinct_hits(ks)


def _distinct_hits(ks: np.ndarray) -> int:
    total = 0
    hit = ks >= 0
    for r in range(ks.shape[0]):
        new = hit[r].copy()
        for q in range(r):
            new &= ~(hit[q] & (ks[q] == ks[r]))
        total += int(np.count_nonzero(new))
    return total


def condition_ii_decomposition(sigma: EntryPermutation, mu: EntryPermutation) -> list[int]:
    """The eight terms j(tau1:tau2), j(tau2:tau1) for tau1 in {sigma, t sigma t}, tau2 in {mu, t mu t}.

    Ordered as [j(s:m), j(m:s), j(s:m*), j(m*:s), j(s*:m), j(m:s*), j(s*:m*), j(m*:s*)]
    where ``*`` denotes conjugation by t.
    """
    _same_side(sigma, mu)
    terms = []
    for t1 in (sigma, conjugate_by_t(sigma)):
        for t2 in (mu, conjugate_by_t(mu)):
            terms.append(j_statistic(t1, t2))
            terms.append(j_statistic(t2, t1))
    return terms


def remark33_counts(mu_a: EntryPermutation, mu_b: EntryPermutation, case: int) -> int:
    """Condition (ii) specialised to symmetric ``mu_b``.

    case 1: #{mu_a(i,j) = mu_b(i,k)}; case 2: #{mu_a(i,j) in {mu_b(i,k), mu_b(k,j)}}.
    """
    if case == 1:
        ks = _membership(mu_a, mu_b, ("ik",), (False,))
    elif case == 2:
        ks = _membership(mu_a, mu_b, ("ik", "kj"), (False, False))
    else:
        raise ValueError(f"case must be 1 or 2, got {case}")
    return _distinct_hits(ks)


# -- growth fits ----------------------------------------------------------------


def fit_exponent(grid: Sequence[tuple[int, int]]) -> float:
    """Least-squares slope of log(count) against log(N) over positive counts."""
    pts = [(math.log(n), math.log(c)) for n, c in grid if c > 0]
    if not pts:
        return -math.inf
    if len(pts) == 1:
        return math.nan
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def growth_verdict(grid: Sequence[tuple[int, int]], threshold: float, margin: float = MARGIN) -> tuple[float, str]:
    """Decide ``count = o(N^threshold)`` from finitely many grid points.

    slope <= threshold - margin satisfies; slope >= threshold - 0.1 with
    every count >= N^threshold / 4 violates; anything else is inconclusive.
    """
    slope = fit_exponent(grid)
    if slope == -math.inf:
        return slope, SATISFIES
    if math.isnan(slope):
        return slope, INCONCLUSIVE
    if slope <= threshold - margin:
        return slope, SATISFIES
    big = all(c >= n**threshold / 4 for n, c in grid)
    if slope >= threshold - VIOLATION_SLACK and big:
        return slope, VIOLATES
    return slope, INCONCLUSIVE


@dataclass
class GrowthReport:
    labels: tuple[str, ...]
    kind: str
    grid: list[tuple[int, int]]
    fitted_exponent: float
    verdict: str
    threshold: float = 2.0
    note: str = ""

    def to_dict(self) -> dict:
        exp = self.fitted_exponent
        return {
            "labels": list(self.labels),
            "kind": self.kind,
            "grid": [{"N": n, "count": c} for n, c in self.grid],
            "exponent": None if math.isnan(exp) else ("-inf" if exp == -math.inf else exp),
            "threshold": self.threshold,
            "verdict": self.verdict,
            "note": self.note,
        }


@dataclass
class FamilyMember:
    """A scheme together with its declared role in condition (i)."""

    scheme: PermutationScheme
    kind: str  # "symmetric" or "jsmall"

    def __post_init__(self):
        if self.kind not in ("symmetric", "jsmall"):
            raise ValueError(f"kind must be 'symmetric' or 'jsmall', got {self.kind!r}")


def certify_family(
    members: Sequence[FamilyMember],
    grid: Sequence[int],
    distinct: bool = True,
) -> list[GrowthReport]:
    """Check both freeness conditions over a grid of side lengths.

    One report per symmetric member (exact symmetry), per j-small member
    (growth of j(mu:mu)), and per unordered pair (growth of the condition
    (ii) count).  Raises :class:`CertificationError` if a member declared
    symmetric is not symmetric at some grid point.
    """
    grid = sorted(set(int(n) for n in grid))
    if len(grid) < 3:
        raise CertificationError(f"need at least 3 grid points, got {grid}")
    for m in members:
        for n in grid:
            if not m.scheme.admissible(n):
                raise CertificationError(f"scheme {m.scheme.label!r} is not defined at side {n}")

    reports = []
    for m in members:
        label = m.scheme.label
        if m.kind == "symmetric":
            counts = [(n, asymmetric_pairs(m.scheme.build(n))) for n in grid]
            bad = [n for n, c in counts if c]
            if bad:
                raise CertificationError(
                    f"scheme {label!r} declared symmetric but is not symmetric at side {bad[0]}"
                )
            reports.append(GrowthReport((label,), "symmetric", counts, -math.inf, SATISFIES,
                                        threshold=0.0, note="count = asymmetric pairs"))
        else:
            counts = [(n, j_statistic(m.scheme.build(n), m.scheme.build(n))) for n in grid]
            exp, verdict = growth_verdict(counts, 2.0)
            reports.append(GrowthReport((label,), "jsmall", counts, exp, verdict))

    for x in range(len(members)):
        for y in range(x + 1, len(members)):
            a, b = members[x].scheme, members[y].scheme
            counts = [(n, condition_ii_count(a.build(n), b.build(n), distinct=distinct)) for n in grid]
            exp, verdict = growth_verdict(counts, 2.0)
            reports.append(GrowthReport((a.label, b.label), "condition_ii", counts, exp, verdict))
    return reports


def all_satisfied(reports: Sequence[GrowthReport]) -> bool:
    return all(r.verdict == SATISFIES for r in reports)
