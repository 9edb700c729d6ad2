"""Exact finite-N moments E o tr(G^s1 ... G^sm) through the Wick expansion."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .pairings import PairPartition, double_factorial, free_limit_prediction, iter_pairings
from .perms import EntryPermutation, PermutationError
from .words import MomentWord, SchemeRegistry, word_signature, word_to_perms

DEFAULT_BUDGET = 10**8
# rows held in memory before the search splits on the branching index
CHUNK_ROWS = 1 << 21


class BudgetExceeded(RuntimeError):
    """The exact evaluation would need more work than the configured budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(f"exact evaluation needs ~{required:.3g} constraint checks, budget is {budget:.3g}")
        self.required = required
        self.budget = budget


def _plan(pi: PairPartition) -> list[tuple]:
    """Data-independent search order for one pairing.

    Index variable v sits between factors v-1 and v; factor k reads the
    pair (v_k, v_{k+1}).  Ops are ("branch", v) or ("prop", k, l): derive
    factor l's pair from factor k's.
    """
    m = pi.m
    assigned: set[int] = set()
    pending = [(k, l) for k, l in enumerate(pi.mate) if k < l]
    ops: list[tuple] = []

    def vars_of(k: int) -> tuple[int, int]:
        return k, (k + 1) % m

    while pending:
        fired = False
        for blk in pending:
            for k, l in (blk, blk[::-1]):
                if all(v in assigned for v in vars_of(k)):
                    ops.append(("prop", k, l))
                    assigned.update(vars_of(l))
                    pending.remove(blk)
                    fired = True
                    break
            if fired:
                break
        if fired:
            continue
        # branch on a variable that completes some factor of a pending block
        choice = None
        for k, l in pending:
            for f in (k, l):
                a, b = vars_of(f)
                if (a in assigned) != (b in assigned):
                    choice = b if a in assigned else a
                    break
            if choice is not None:
                break
        if choice is None:
            choice = min(v for v in range(m) if v not in assigned)
        ops.append(("branch", choice))
        assigned.add(choice)
    return ops


def search_cost(pi: PairPartition, n: int) -> int:
    """Upper bound on rows x constraint evaluations for one pairing."""
    ops = _plan(pi)
    branches = sum(1 for op in ops if op[0] == "branch")
    props = len(ops) - branches
    return n**branches * max(props, 1)


def _block_maps(pi: PairPartition, perms: Sequence[EntryPermutation]) -> dict[tuple[int, int], np.ndarray]:
    # sigma_k(x) = t(sigma_l(y))  <=>  y = sigma_l^-1(t(sigma_k(x)))
    n = perms[0].n
    p = np.arange(n * n)
    tflat = (p % n) * n + p // n
    maps = {}
    for k, l in enumerate(pi.mate):
        maps[(k, l)] = perms[l].inverse_flat[tflat[perms[k].flat]]
    return maps


def tuple_count(pi: PairPartition, perms: Sequence[EntryPermutation], n: int | None = None) -> int:
    """#{(i_1..i_m) in [n]^m : sigma_k(i_k, i_{k+1}) = t(sigma_l(i_l, i_{l+1})) for each block (k, l)}.

    Indices are cyclic (i_{m+1} = i_1).  The search assigns indices in a
    fixed order, derives each block's second pair from its first, and
    filters on conflicts, so it visits only consistent partial tuples.
    """
    if len(perms) != pi.m:
        raise PermutationError(f"pairing has length {pi.m} but {len(perms)} permutations given")
    sides = {p.n for p in perms}
    if len(sides) != 1 or (n is not None and sides != {n}):
        raise PermutationError(f"permutation sides {sorted(sides)} do not match N={n}")
    n = sides.pop()
    m = pi.m
    ops = _plan(pi)
    maps = _block_maps(pi, perms)

    def run(idx: int, cols: list, rows: int) -> int:
        for pos in range(idx, len(ops)):
            op = ops[pos]
            if op[0] == "branch":
                v = op[1]
                if rows * n > CHUNK_ROWS:
                    total = 0
                    for val in range(n):
                        sub = list(cols)
                        sub[v] = np.full(rows, val, dtype=np.int64)
                        total += run(pos + 1, sub, rows)
                    return total
                cols = [None if c is None else np.repeat(c, n) for c in cols]
                cols[v] = np.tile(np.arange(n, dtype=np.int64), rows)
                rows *= n
                continue
            _, k, l = op
            y = maps[(k, l)][cols[k] * n + cols[(k + 1) % m]]
            derived = {l: y // n, (l + 1) % m: y % n}
            for var in (l, (l + 1) % m):
                val = derived[var]
                if cols[var] is None:
                    cols[var] = val
                    continue
                keep = cols[var] == val
                if keep.all():
                    continue
                rows = int(keep.sum())
                if rows == 0:
                    return 0
                cols = [None if c is None else c[keep] for c in cols]
                derived = {key: arr[keep] for key, arr in derived.items()}
        return rows

    return run(0, [None] * m, 1)


def tuple_count_naive(pi: PairPartition, perms: Sequence[EntryPermutation]) -> int:
    """Reference count by scanning all of [n]^m."""
    import itertools

    n = perms[0].n
    m = pi.m
    maps = _block_maps(pi, perms)
    count = 0
    for idx in itertools.product(range(n), repeat=m):
        ok = True
        for k, l in enumerate(pi.mate):
            if k < l:
                x = idx[k] * n + idx[(k + 1) % m]
                y = idx[l] * n + idx[(l + 1) % m]
                if maps[(k, l)][x] != y:
                    ok = False
                    break
        count += ok
    return count


def V_exact(pi: PairPartition, perms: Sequence[EntryPermutation], n: int | None = None) -> Fraction:
    """tuple_count * N^(-m/2 - 1)."""
    count = tuple_count(pi, perms, n)
    n = perms[0].n
    return Fraction(count, n ** (pi.m // 2 + 1))


@dataclass
class ExactMoment:
    value: Fraction
    n: int
    m: int
    per_pairing: list[tuple[PairPartition, int, Fraction]] = field(default_factory=list)
    word: str = ""

    def to_dict(self) -> dict:
        return {
            "N": self.n,
            "m": self.m,
            "word": self.word,
            "value": f"{self.value.numerator}/{self.value.denominator}",
            "per_pairing": [
                {"blocks": [list(b) for b in pi.blocks()], "count": c, "V": f"{v.numerator}/{v.denominator}"}
                for pi, c, v in self.per_pairing
            ],
        }


def exact_cost(m: int, n: int) -> int:
    if m % 2:
        return 0
    return sum(search_cost(pi, n) for pi in iter_pairings(m))


def exact_moment(perms: Sequence[EntryPermutation], n: int | None = None, budget: int = DEFAULT_BUDGET, word: str = "") -> ExactMoment:
    """Sum of V(pi, sigma) over all pairings, in exact arithmetic."""
    perms = list(perms)
    if not perms:
        raise ValueError("empty word")
    sides = {p.n for p in perms}
    if len(sides) != 1 or (n is not None and sides != {n}):
        raise PermutationError(f"permutation sides {sorted(sides)} do not match N={n}")
    n = sides.pop()
    m = len(perms)
    if m % 2:
        return ExactMoment(Fraction(0), n, m, [], word)
    required = exact_cost(m, n)
    if required > budget:
        raise BudgetExceeded(required, budget)
    norm = n ** (m // 2 + 1)
    rows = []
    total = Fraction(0)
    for pi in iter_pairings(m):
        count = tuple_count(pi, perms, n)
        v = Fraction(count, norm)
        rows.append((pi, count, v))
        total += v
    return ExactMoment(total, n, m, rows, word)


def exact_word_moment(word: MomentWord, n: int, registry: SchemeRegistry | None = None, budget: int = DEFAULT_BUDGET) -> ExactMoment:
    return exact_moment(word_to_perms(word, n, registry), n, budget=budget, word=str(word))


@dataclass
class AsymptoticRow:
    n: int
    value: Fraction
    gap: Fraction


@dataclass
class AsymptoticCheck:
    word: str
    prediction: int
    rows: list[AsymptoticRow]

    def gaps(self) -> list[float]:
        return [float(r.gap) for r in self.rows]

    def monotone(self) -> bool:
        g = [r.gap for r in self.rows]
        return all(b <= a for a, b in zip(g, g[1:]))

    def to_dict(self) -> dict:
        return {
            "word": self.word,
            "prediction": self.prediction,
            "rows": [{"N": r.n, "value": str(r.value), "value_float": float(r.value), "gap": float(r.gap)} for r in self.rows],
        }


def asymptotic_check(
    word: MomentWord,
    grid: Sequence[int],
    registry: SchemeRegistry | None = None,
    budget: int = DEFAULT_BUDGET,
    kinds: dict | None = None,
) -> AsymptoticCheck:
    """Exact values across a grid next to the free-limit prediction."""
    registry = registry or SchemeRegistry()
    grid = sorted(grid)
    pred = free_limit_prediction(word_signature(word, grid[-1], registry, kinds))
    rows = []
    for n in grid:
        val = exact_word_moment(word, n, registry, budget).value
        rows.append(AsymptoticRow(n, val, abs(val - pred)))
    return AsymptoticCheck(str(word), pred, rows)


def max_exact_side(m: int, budget: int = DEFAULT_BUDGET, limit: int = 4096) -> int:
    """Largest side at which a length-m word fits the budget."""
    n = 1
    while n < limit and exact_cost(m, n + 1) <= budget:
        n += 1
    return n
