"""Moment words, the built-in scheme names, and the constant matrices."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .pairings import CIRCULAR, SEMICIRCULAR, WordSignature
from .perms import (
    EntryPermutation,
    PermutationScheme,
    conjugate_by_t,
    custom_file_scheme,
    identity_scheme,
    is_symmetric,
    mixing_map_scheme,
    partial_transpose_scheme,
    remark41_schemes,
    remark42_scheme,
    tensor_scheme,
    transpose_scheme,
)

CONSTANT_LABELS = ("I", "Z", "T")


class WordError(ValueError):
    """Raised for unparseable words or unknown labels."""


@dataclass(frozen=True)
class Factor:
    label: str
    star: bool = False
    constant: bool = False

    def __str__(self) -> str:
        return self.label + ("*" if self.star else "")


@dataclass(frozen=True)
class MomentWord:
    """An ordered product of permuted copies of one Gaussian matrix and constants."""

    factors: tuple[Factor, ...]

    @classmethod
    def parse(cls, spec: str) -> "MomentWord":
        """Parse ``"id,gamma*,Z"``: comma-separated labels, optional trailing ``*``."""
        factors = []
        for tok in spec.split(","):
            tok = tok.strip()
            if not tok:
                raise WordError(f"empty factor in word {spec!r}")
            star = tok.endswith("*")
            label = tok[:-1].strip() if star else tok
            if not label:
                raise WordError(f"bare '*' in word {spec!r}")
            const = label in CONSTANT_LABELS
            if const and star:
                raise WordError(f"constant {label} cannot carry a star")
            factors.append(Factor(label, star, const))
        if not factors:
            raise WordError("empty word")
        return cls(tuple(factors))

    @classmethod
    def of(cls, *labels: str) -> "MomentWord":
        return cls.parse(",".join(labels))

    @property
    def m(self) -> int:
        return len(self.factors)

    @property
    def has_constants(self) -> bool:
        return any(f.constant for f in self.factors)

    def scheme_labels(self) -> list[str]:
        return sorted({f.label for f in self.factors if not f.constant})

    def __str__(self) -> str:
        return ",".join(str(f) for f in self.factors)


# -- permutations of [n] by name ------------------------------------------------

_LINE_RE = re.compile(r"^(id|rev|shift(-?\d+)|mul(\d+))$")


def line_perm_rule(spec: str) -> tuple[Callable[[int], list[int]], Callable[[int], bool]]:
    """Rule ``n -> permutation of [n]`` for ``id``, ``rev``, ``shift<k>``, ``mul<k>``."""
    mt = _LINE_RE.match(spec)
    if not mt:
        raise WordError(f"unknown line permutation {spec!r} (use id, rev, shift<k>, mul<k>)")
    if spec == "id":
        return (lambda n: list(range(1, n + 1))), (lambda n: n >= 1)
    if spec == "rev":
        return (lambda n: list(range(n, 0, -1))), (lambda n: n >= 1)
    if mt.group(2) is not None:
        k = int(mt.group(2))
        return (lambda n: [(i - 1 + k) % n + 1 for i in range(1, n + 1)]), (lambda n: n >= 1)
    k = int(mt.group(3))
    return (lambda n: [(k * (i - 1)) % n + 1 for i in range(1, n + 1)]), (lambda n: n >= 1 and math.gcd(k, n) == 1)


def _tensor_from_spec(spec: str) -> PermutationScheme:
    body = spec[len("tensor:"):]
    parts = body.split("/")
    if len(parts) != 2:
        raise WordError(f"tensor spec must be tensor:<phi>/<psi>, got {spec!r}")
    phi, adm_phi = line_perm_rule(parts[0])
    psi, adm_psi = line_perm_rule(parts[1])
    return tensor_scheme(phi, psi, label=spec, admissible=lambda n: adm_phi(n) and adm_psi(n))


class SchemeRegistry:
    """Resolves scheme labels to :class:`PermutationScheme` objects.

    Built-in names: ``id``, ``t``, ``gamma``, ``mix``, ``r41a``, ``r41b``,
    ``r42``, ``tensor:<phi>/<psi>`` and ``custom:<path>[;<path>...]``.
    """

    def __init__(self) -> None:
        r41a, r41b = remark41_schemes()
        self._schemes: dict[str, PermutationScheme] = {
            s.label: s
            for s in (
                identity_scheme(),
                transpose_scheme(),
                partial_transpose_scheme(),
                mixing_map_scheme(),
                r41a,
                r41b,
                remark42_scheme(),
            )
        }
        # aliases used in prose
        self._schemes["mu1"] = r41a
        self._schemes["mu2"] = r41b
        self._schemes["tau"] = self._schemes["r42"]

    def register(self, label: str, scheme: PermutationScheme) -> None:
        self._schemes[label] = scheme

    def get(self, label: str) -> PermutationScheme:
        if label in self._schemes:
            return self._schemes[label]
        if label.startswith("tensor:"):
            scheme = _tensor_from_spec(label)
        elif label.startswith("custom:"):
            paths = [p for p in label[len("custom:"):].split(";") if p]
            if not paths:
                raise WordError(f"custom scheme needs a path: {label!r}")
            scheme = custom_file_scheme(paths, label=label)
        else:
            raise WordError(f"unknown scheme label {label!r}")
        self._schemes[label] = scheme
        return scheme

    __getitem__ = get

    def admissible(self, word: MomentWord, n: int) -> bool:
        return all(self.get(lab).admissible(n) for lab in word.scheme_labels())


def word_to_perms(word: MomentWord, n: int, registry: SchemeRegistry | None = None) -> list[EntryPermutation]:
    """Entry permutations of a Gaussian-only word; starred factors become t-conjugates."""
    registry = registry or SchemeRegistry()
    out = []
    for f in word.factors:
        if f.constant:
            raise WordError(f"constant factor {f.label} cannot be evaluated exactly")
        perm = registry.get(f.label).build(n)
        out.append(conjugate_by_t(perm) if f.star else perm)
    return out


def word_signature(word: MomentWord, n: int, registry: SchemeRegistry | None = None, kinds: dict | None = None) -> WordSignature:
    """Signature of the word in the free limit.

    Unless ``kinds`` overrides, a label is semicircular when its permutation
    is symmetric at side ``n`` and circular otherwise; stars on symmetric
    labels are dropped since they do not change the matrix.
    """
    registry = registry or SchemeRegistry()
    if word.has_constants:
        raise WordError("free-limit prediction covers Gaussian-only words")
    kinds = dict(kinds or {})
    for lab in word.scheme_labels():
        if lab not in kinds:
            kinds[lab] = SEMICIRCULAR if is_symmetric(registry.get(lab).build(n)) else CIRCULAR
    labels = tuple(f.label for f in word.factors)
    stars = tuple(f.star and kinds[f.label] == CIRCULAR for f in word.factors)
    return WordSignature(labels, stars, kinds)


def constant_library(n: int) -> dict[str, np.ndarray]:
    """Identity at every side, plus the block matrices Z and T at even sides."""
    lib = {"I": np.eye(n)}
    if n % 2 == 0:
        h = n // 2
        e = np.eye(h)
        zero = np.zeros((h, h))
        lib["Z"] = np.block([[e, 2 * e], [zero, e]])
        lib["T"] = np.block([[e, -e], [2 * e, -e]])
    return lib


def constant_matrix(label: str, n: int) -> np.ndarray:
    lib = constant_library(n)
    if label not in lib:
        if label in ("Z", "T"):
            raise WordError(f"constant {label} needs an even side, got {n}")
        raise WordError(f"unknown constant {label!r}")
    return lib[label]


def parse_grid(spec: str | Sequence[int]) -> list[int]:
    if isinstance(spec, str):
        vals = [int(v) for v in spec.split(",") if v.strip()]
    else:
        vals = [int(v) for v in spec]
    if not vals or any(v < 1 for v in vals):
        raise WordError(f"grid must be a nonempty list of positive integers, got {spec!r}")
    return vals
