"""Entry permutations of [n] x [n] and the named families built from them.

Every public interface speaks 1-based indices.  Internally a permutation is
a dense table over flat 0-based positions ``p = i * n + j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np


class PermutationError(ValueError):
    """Raised for malformed permutation tables or mismatched sizes."""


class InadmissibleSizeError(ValueError):
    """Raised when a scheme is asked for a side length it is not defined at."""


class EntryPermutation:
    """A bijection of the entry positions of an ``n x n`` matrix.

    Calling the object with a 1-based pair ``(i, j)`` returns the 1-based
    image pair.  Instances are immutable.
    """

    __slots__ = ("n", "_flat", "_inv")

    def __init__(self, n: int, flat: Iterable[int]):
        if n < 1:
            raise PermutationError(f"side length must be positive, got {n}")
        arr = np.array(flat, dtype=np.int64).ravel()
        if arr.size != n * n:
            raise PermutationError(f"expected {n * n} entries, got {arr.size}")
        if arr.size and (arr.min() < 0 or arr.max() >= n * n):
            raise PermutationError("table entries out of range")
        inv = np.full(n * n, -1, dtype=np.int64)
        inv[arr] = np.arange(n * n, dtype=np.int64)
        if (inv < 0).any():
            counts = np.bincount(arr, minlength=n * n)
            dup = int(np.flatnonzero(counts > 1)[0])
            raise PermutationError(
                f"not a bijection: target {_pair(dup, n)} is hit {counts[dup]} times"
            )
        arr.flags.writeable = False
        inv.flags.writeable = False
        self.n = n
        self._flat = arr
        self._inv = inv

    @classmethod
    def from_pairs(cls, n: int, mapping: Mapping[tuple[int, int], tuple[int, int]]) -> "EntryPermutation":
        """Build from an explicit ``{(i, j): (p, q)}`` table (1-based)."""
        flat = np.full(n * n, -1, dtype=np.int64)
        for (i, j), (p, q) in mapping.items():
            for v in (i, j, p, q):
                if not 1 <= v <= n:
                    raise PermutationError(f"index {v} outside [1, {n}]")
            flat[(i - 1) * n + (j - 1)] = (p - 1) * n + (q - 1)
        missing = np.flatnonzero(flat < 0)
        if missing.size:
            raise PermutationError(f"no image given for pair {_pair(int(missing[0]), n)}")
        seen: dict[int, int] = {}
        for src, dst in enumerate(flat.tolist()):
            if dst in seen:
                raise PermutationError(
                    f"not a bijection: {_pair(seen[dst], n)} and {_pair(src, n)} "
                    f"both map to {_pair(dst, n)}"
                )
            seen[dst] = src
        return cls(n, flat)

    @classmethod
    def from_function(cls, n: int, fn: Callable[[int, int], tuple[int, int]]) -> "EntryPermutation":
        flat = [0] * (n * n)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                p, q = fn(i, j)
                if not (1 <= p <= n and 1 <= q <= n):
                    raise PermutationError(f"image {(p, q)} of {(i, j)} outside [1, {n}]^2")
                flat[(i - 1) * n + (j - 1)] = (p - 1) * n + (q - 1)
        return cls(n, flat)

    @property
    def flat(self) -> np.ndarray:
        """Read-only 0-based flat image table."""
        return self._flat

    @property
    def inverse_flat(self) -> np.ndarray:
        return self._inv

    def inverse(self) -> "EntryPermutation":
        return EntryPermutation(self.n, self._inv)

    def __call__(self, i: int, j: int) -> tuple[int, int]:
        n = self.n
        if not (1 <= i <= n and 1 <= j <= n):
            raise IndexError(f"pair {(i, j)} outside [1, {n}]^2")
        return _pair(int(self._flat[(i - 1) * n + (j - 1)]), n)

    def rows_cols(self) -> tuple[np.ndarray, np.ndarray]:
        """0-based target row and column arrays, shaped ``(n, n)``."""
        n = self.n
        tgt = self._flat.reshape(n, n)
        return tgt // n, tgt % n

    def is_identity(self) -> bool:
        return bool(np.array_equal(self._flat, np.arange(self.n * self.n)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EntryPermutation):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self._flat, other._flat))

    def __hash__(self) -> int:
        return hash((self.n, self._flat.tobytes()))

    def __repr__(self) -> str:
        return f"EntryPermutation(n={self.n})"


def _pair(flat_index: int, n: int) -> tuple[int, int]:
    return flat_index // n + 1, flat_index % n + 1


def identity_perm(n: int) -> EntryPermutation:
    return EntryPermutation(n, np.arange(n * n))


def transpose_perm(n: int) -> EntryPermutation:
    """The transpose ``t(i, j) = (j, i)``."""
    return EntryPermutation(n, np.arange(n * n).reshape(n, n).T.ravel())


def compose(a: EntryPermutation, b: EntryPermutation) -> EntryPermutation:
    """``a o b``, i.e. ``(i, j) -> a(b(i, j))``."""
    if a.n != b.n:
        raise PermutationError(f"size mismatch: {a.n} vs {b.n}")
    return EntryPermutation(a.n, a.flat[b.flat])


def conjugate_by_t(sigma: EntryPermutation) -> EntryPermutation:
    """``t o sigma o t``; realizes the adjoint, ``(G^sigma)* = G^(t o sigma o t)``."""
    t = transpose_perm(sigma.n)
    return compose(t, compose(sigma, t))


def is_symmetric(sigma: EntryPermutation) -> bool:
    return conjugate_by_t(sigma) == sigma


def asymmetric_pairs(sigma: EntryPermutation) -> int:
    """Number of pairs at which ``t o sigma o t`` and ``sigma`` disagree."""
    return int(np.count_nonzero(conjugate_by_t(sigma).flat != sigma.flat))


def apply_to_matrix(a: np.ndarray, sigma: EntryPermutation) -> np.ndarray:
    """Return ``A^sigma`` with ``[A^sigma]_{ij} = [A]_{sigma(i,j)}``."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape != (sigma.n, sigma.n):
        raise PermutationError(f"matrix shape {a.shape} does not match side {sigma.n}")
    return a.reshape(-1)[sigma.flat].reshape(a.shape)


# -- permutations of [n] (single index) --------------------------------------


def check_line_perm(perm: Sequence[int], n: int) -> tuple[int, ...]:
    """Validate a 1-based permutation of [n] and return it as a tuple."""
    perm = tuple(int(v) for v in perm)
    if len(perm) != n:
        raise PermutationError(f"expected a permutation of [{n}], got length {len(perm)}")
    if sorted(perm) != list(range(1, n + 1)):
        seen = set()
        for v in perm:
            if v in seen or not 1 <= v <= n:
                raise PermutationError(f"not a permutation of [{n}]: offending value {v}")
            seen.add(v)
    return perm


def tensor_perm(phi: Sequence[int], psi: Sequence[int]) -> EntryPermutation:
    """``(phi x psi)(i, j) = (phi(i), psi(j))`` for 1-based permutations of [n]."""
    n = len(phi)
    phi = np.array(check_line_perm(phi, n)) - 1
    psi = np.array(check_line_perm(psi, n)) - 1
    return EntryPermutation(n, (phi[:, None] * n + psi[None, :]).ravel())


def phi_fold(n: int, k: int) -> int:
    """Reduce ``k`` in [2n] to the representative of its class mod n in [n]."""
    if not 1 <= k <= 2 * n:
        raise ValueError(f"k={k} outside [1, {2 * n}]")
    return (k - 1) % n + 1


def _fold(n: int, k: int) -> int:
    return (k - 1) % n + 1


# -- schemes ------------------------------------------------------------------


def _all_sides(n: int) -> bool:
    return n >= 1


def _square_sides(n: int) -> bool:
    return n >= 1 and math.isqrt(n) ** 2 == n


@dataclass(frozen=True, eq=False)
class PermutationScheme:
    """A named family ``n -> EntryPermutation`` of side ``n``."""

    label: str
    admissible: Callable[[int], bool]
    rule: Callable[[int], EntryPermutation]
    description: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def build(self, n: int) -> EntryPermutation:
        if not self.admissible(n):
            raise InadmissibleSizeError(f"scheme {self.label!r} is not defined at side {n}")
        if n not in self._cache:
            perm = self.rule(n)
            if perm.n != n:
                raise PermutationError(f"scheme {self.label!r} built side {perm.n} for {n}")
            self._cache[n] = perm
        return self._cache[n]


def identity_scheme() -> PermutationScheme:
    return PermutationScheme("id", _all_sides, identity_perm, "identity")


def transpose_scheme() -> PermutationScheme:
    return PermutationScheme("t", _all_sides, transpose_perm, "matrix transpose")


def tensor_scheme(
    phi_rule: Callable[[int], Sequence[int]],
    psi_rule: Callable[[int], Sequence[int]],
    label: str = "tensor",
    admissible: Callable[[int], bool] = _all_sides,
) -> PermutationScheme:
    """Scheme ``n -> phi_n x psi_n`` from two rules producing permutations of [n]."""

    def rule(n: int) -> EntryPermutation:
        return tensor_perm(phi_rule(n), psi_rule(n))

    return PermutationScheme(label, admissible, rule, "tensor product of line permutations")


def _block_perm(side: int, shuffle: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], tuple]) -> EntryPermutation:
    # (i, j) = ((a-1)N + b, (c-1)N + d), all 0-based here
    n = math.isqrt(side)
    i, j = np.divmod(np.arange(side * side), side)
    a, b = np.divmod(i, n)
    c, d = np.divmod(j, n)
    a2, b2, c2, d2 = shuffle(a, b, c, d)
    return EntryPermutation(side, (a2 * n + b2) * side + (c2 * n + d2))


def partial_transpose_perm(side: int) -> EntryPermutation:
    """Block-wise transpose of a ``N^2 x N^2`` matrix: ``(a,b,c,d) -> (a,d,c,b)``."""
    if not _square_sides(side):
        raise InadmissibleSizeError(f"partial transpose needs a square side, got {side}")
    return _block_perm(side, lambda a, b, c, d: (a, d, c, b))


def mixing_perm(side: int) -> EntryPermutation:
    """Mixing map on a ``N^2 x N^2`` matrix: ``(a,b,c,d) -> (a,c,b,d)``."""
    if not _square_sides(side):
        raise InadmissibleSizeError(f"mixing map needs a square side, got {side}")
    return _block_perm(side, lambda a, b, c, d: (a, c, b, d))


def partial_transpose_scheme() -> PermutationScheme:
    return PermutationScheme("gamma", _square_sides, partial_transpose_perm, "partial transpose")


def mixing_map_scheme() -> PermutationScheme:
    return PermutationScheme("mix", _square_sides, mixing_perm, "mixing map")


def omega_perm(n: int) -> EntryPermutation:
    """``(i, j) -> (i+1, j+2)`` with both coordinates reduced mod n."""
    return EntryPermutation.from_function(n, lambda i, j: (_fold(n, i + 1), _fold(n, j + 2)))


def block_transpose2_perm(n: int) -> EntryPermutation:
    """On side 2n, swap the residues mod n of the two coordinates."""
    def g(i: int, j: int) -> tuple[int, int]:
        fi, fj = _fold(n, i), _fold(n, j)
        return i - fi + fj, j - fj + fi

    return EntryPermutation.from_function(2 * n, g)


def _remark41_first(side: int) -> EntryPermutation:
    n = side // 2
    if n == 0:
        return identity_perm(side)
    omega = omega_perm(n)

    def mu(i: int, j: int) -> tuple[int, int]:
        if i <= n and j <= n:
            return omega(i, j)
        return i, j

    return EntryPermutation.from_function(side, mu)


def _remark41_second(side: int) -> EntryPermutation:
    n = side // 2
    if n == 0:
        return identity_perm(side)
    first = _remark41_first(side)
    gamma = block_transpose2_perm(n)
    if side == 2 * n:
        return compose(gamma, first)
    # odd side: the last row and column stay fixed
    even = compose(gamma, _remark41_first(2 * n))
    return EntryPermutation.from_function(
        side, lambda i, j: even(i, j) if i <= 2 * n and j <= 2 * n else (i, j)
    )


def remark41_schemes() -> tuple[PermutationScheme, PermutationScheme]:
    """The pair of families that satisfy condition (ii) but not condition (i)."""
    return (
        PermutationScheme("r41a", _all_sides, _remark41_first, "shifted top-left block"),
        PermutationScheme("r41b", _all_sides, _remark41_second, "block residue swap after r41a"),
    )


def tau_perm(n: int) -> EntryPermutation:
    """``(i, j) -> (i + j mod n, j)``; a cyclic shift of each column."""
    return EntryPermutation.from_function(n, lambda i, j: (phi_fold(n, i + j), j))


def remark42_scheme() -> PermutationScheme:
    return PermutationScheme("r42", _all_sides, tau_perm, "column-wise cyclic shift")


def custom_scheme(tables: Mapping[int, EntryPermutation | Mapping], label: str = "custom") -> PermutationScheme:
    """Wrap explicit tables, one per side length."""
    built: dict[int, EntryPermutation] = {}
    for n, table in tables.items():
        if isinstance(table, EntryPermutation):
            if table.n != n:
                raise PermutationError(f"table for side {n} has side {table.n}")
            built[n] = table
        else:
            built[n] = EntryPermutation.from_pairs(n, table)
    return PermutationScheme(label, built.__contains__, built.__getitem__, "user-supplied table")


def load_custom_table(path: str | Path) -> EntryPermutation:
    """Read the ``N <n>`` / ``i j -> p q`` text format."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise PermutationError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "N":
        raise PermutationError(f"{path}: first line must be 'N <n>', got {lines[0]!r}")
    n = int(head[1])
    mapping: dict[tuple[int, int], tuple[int, int]] = {}
    for lineno, ln in enumerate(lines[1:], start=2):
        lhs, sep, rhs = ln.partition("->")
        if not sep:
            raise PermutationError(f"{path}:{lineno}: expected 'i j -> p q'")
        try:
            i, j = (int(v) for v in lhs.split())
            p, q = (int(v) for v in rhs.split())
        except ValueError:
            raise PermutationError(f"{path}:{lineno}: expected 'i j -> p q'") from None
        if (i, j) in mapping:
            raise PermutationError(f"{path}:{lineno}: pair {(i, j)} listed twice")
        mapping[(i, j)] = (p, q)
    if len(mapping) != n * n:
        raise PermutationError(f"{path}: expected {n * n} pairs, found {len(mapping)}")
    return EntryPermutation.from_pairs(n, mapping)


def dump_custom_table(perm: EntryPermutation) -> str:
    n = perm.n
    out = [f"N {n}"]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            p, q = perm(i, j)
            out.append(f"{i} {j} -> {p} {q}")
    return "\n".join(out) + "\n"


def custom_file_scheme(paths: Iterable[str | Path], label: str = "custom") -> PermutationScheme:
    tables = {}
    for p in paths:
        perm = load_custom_table(p)
        tables[perm.n] = perm
    return custom_scheme(tables, label=label)
