"""Pair partitions, crossings, and non-crossing counts for moment words."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

MAX_PAIRING_LENGTH = 16

SEMICIRCULAR = "semicircular"
CIRCULAR = "circular"


@dataclass(frozen=True)
class PairPartition:
    """Fixed-point-free involution of [m], stored 0-based in ``mate``."""

    mate: tuple[int, ...]

    def __post_init__(self):
        m = len(self.mate)
        if m == 0 or m % 2:
            raise ValueError(f"pairing length must be even and positive, got {m}")
        for k, l in enumerate(self.mate):
            if not 0 <= l < m or l == k or self.mate[l] != k:
                raise ValueError(f"not a fixed-point-free involution: {self.mate}")

    @classmethod
    def from_blocks(cls, blocks: Sequence[tuple[int, int]]) -> "PairPartition":
        """Build from 1-based blocks, e.g. ``[(1, 3), (2, 4)]``."""
        m = 2 * len(blocks)
        mate = [-1] * m
        for a, b in blocks:
            mate[a - 1] = b - 1
            mate[b - 1] = a - 1
        return cls(tuple(mate))

    @property
    def m(self) -> int:
        return len(self.mate)

    def blocks(self) -> list[tuple[int, int]]:
        """1-based blocks ``(a, b)`` with ``a < b``, sorted by ``a``."""
        return [(k + 1, l + 1) for k, l in enumerate(self.mate) if k < l]

    def __str__(self) -> str:
        return "".join(f"({a},{b})" for a, b in self.blocks())


def double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def _check_length(m: int) -> None:
    if m <= 0 or m % 2:
        raise ValueError(f"pairings need an even positive length, got {m}")


def iter_pairings(m: int) -> Iterator[PairPartition]:
    """Yield every pairing of [m]; the smallest unpaired element is matched first.

    Order is lexicographic in the block list.
    """
    _check_length(m)
    if m > MAX_PAIRING_LENGTH:
        raise ValueError(f"m={m} exceeds the enumeration guard of {MAX_PAIRING_LENGTH}")
    mate = [-1] * m

    def rec() -> Iterator[PairPartition]:
        try:
            first = mate.index(-1)
        except ValueError:
            yield PairPartition(tuple(mate))
            return
        for other in range(first + 1, m):
            if mate[other] == -1:
                mate[first], mate[other] = other, first
                yield from rec()
                mate[first] = mate[other] = -1

    yield from rec()


def enumerate_pairings(m: int) -> list[PairPartition]:
    return list(iter_pairings(m))


def is_noncrossing(pi: PairPartition) -> bool:
    mate = pi.mate
    for a, c in enumerate(mate):
        if c < a:
            continue
        for b in range(a + 1, c):
            if mate[b] > c:
                return False
    return True


def count_nc2(m: int) -> int:
    return sum(1 for pi in iter_pairings(m) if is_noncrossing(pi))


def noncrossing_pairings(m: int) -> list[PairPartition]:
    return [pi for pi in iter_pairings(m) if is_noncrossing(pi)]


@dataclass(frozen=True)
class WordSignature:
    """Labels and star flags of a word in free semicircular/circular variables."""

    labels: tuple[str, ...]
    stars: tuple[bool, ...]
    kinds: Mapping[str, str]

    def __post_init__(self):
        if len(self.labels) != len(self.stars):
            raise ValueError("labels and stars must have equal length")
        for lab, star in zip(self.labels, self.stars):
            kind = self.kinds.get(lab)
            if kind not in (SEMICIRCULAR, CIRCULAR):
                raise ValueError(f"label {lab!r} has no kind (semicircular or circular)")
            if star and kind == SEMICIRCULAR:
                raise ValueError(f"star on semicircular label {lab!r}")

    @property
    def m(self) -> int:
        return len(self.labels)

    @classmethod
    def parse(cls, word: str, kinds: Mapping[str, str]) -> "WordSignature":
        """Parse ``"c,c*,a"`` style words."""
        labels, stars = [], []
        for tok in word.split(","):
            tok = tok.strip()
            if not tok:
                raise ValueError(f"empty factor in word {word!r}")
            star = tok.endswith("*")
            labels.append(tok[:-1] if star else tok)
            stars.append(star)
        return cls(tuple(labels), tuple(stars), dict(kinds))


def block_admissible(sig: WordSignature, k: int, l: int) -> bool:
    if sig.labels[k] != sig.labels[l]:
        return False
    if sig.kinds[sig.labels[k]] == CIRCULAR:
        return sig.stars[k] != sig.stars[l]
    return True


def count_nc2_constrained(sig: WordSignature) -> int:
    """Number of non-crossing pairings whose blocks join equal labels,
    with opposite stars on circular labels.

    Interval-peeling recursion, so no length guard applies.
    """
    m = sig.m
    if m == 0:
        return 1
    if m % 2:
        return 0
    memo: dict[tuple[int, int], int] = {}

    def count(lo: int, hi: int) -> int:
        # non-crossing admissible pairings of positions lo..hi-1
        if lo >= hi:
            return 1
        if (hi - lo) % 2:
            return 0
        key = (lo, hi)
        if key not in memo:
            total = 0
            for partner in range(lo + 1, hi, 2):
                if block_admissible(sig, lo, partner):
                    total += count(lo + 1, partner) * count(partner + 1, hi)
            memo[key] = total
        return memo[key]

    return count(0, m)


def free_limit_prediction(sig: WordSignature) -> int:
    """Limit of E o tr of the word for a free semicircular/circular family of variance 1."""
    return count_nc2_constrained(sig)
