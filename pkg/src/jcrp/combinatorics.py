"""Set partitions, permutations and integer partitions, plus the maps between them.

Everything here is exact: counts are Python integers and the two rational
helpers return :class:`fractions.Fraction`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, prod
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, RangeError


@dataclass(frozen=True)
class SetPartition:
    """A partition of ``{1, ..., n}`` held in canonical form.

    Elements ascend within a block and blocks are ordered by their least
    element, so two partitions are equal exactly when their fields are.
    Use :meth:`from_blocks` to build one from arbitrary input.
    """

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"ground set size must be positive, got {self.n}")
        seen = [e for b in self.blocks for e in b]
        if any(len(b) == 0 for b in self.blocks):
            raise DomainError("blocks must be non-empty")
        if sorted(seen) != list(range(1, self.n + 1)):
            raise DomainError(f"blocks {self.blocks} do not partition [1..{self.n}]")
        for b in self.blocks:
            if list(b) != sorted(b):
                raise DomainError(f"block {b} is not in ascending order")
        mins = [b[0] for b in self.blocks]
        if mins != sorted(mins):
            raise DomainError("blocks are not ordered by least element")

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], n: int | None = None) -> SetPartition:
        bs = [tuple(sorted(b)) for b in blocks]
        bs = [b for b in bs if b]
        bs.sort(key=lambda b: b[0])
        if n is None:
            n = sum(len(b) for b in bs)
        return cls(n, tuple(bs))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> SetPartition:
        """Build from per-element block labels; ``labels[i]`` is the label of ``i + 1``."""
        groups: dict[int, list[int]] = {}
        for e, lab in enumerate(labels, start=1):
            groups.setdefault(lab, []).append(e)
        return cls.from_blocks(groups.values(), n=len(labels))

    @classmethod
    def single_block(cls, n: int) -> SetPartition:
        return cls(n, (tuple(range(1, n + 1)),))

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def block_sizes(self) -> list[int]:
        return [len(b) for b in self.blocks]

    def labels(self) -> tuple[int, ...]:
        """Restricted growth string: 0-based index of each element's block."""
        out = [0] * self.n
        for i, b in enumerate(self.blocks):
            for e in b:
                out[e - 1] = i
        return tuple(out)

    def relabel(self, perm: Permutation) -> SetPartition:
        """Image of the partition under the element map ``e -> perm(e)``."""
        if perm.n != self.n:
            raise DomainError("relabeling permutation has the wrong size")
        return SetPartition.from_blocks(
            ([perm.image[e - 1] for e in b] for b in self.blocks), n=self.n)

    def to_text(self) -> str:
        return "|".join(" ".join(map(str, b)) for b in self.blocks)

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class Permutation:
    """A bijection of ``{1, ..., n}``; ``image[i - 1]`` is the image of ``i``."""

    n: int
    image: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"permutation size must be positive, got {self.n}")
        if len(self.image) != self.n or sorted(self.image) != list(range(1, self.n + 1)):
            raise DomainError(f"{self.image} is not a permutation of [1..{self.n}]")

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(n, tuple(range(1, n + 1)))

    @classmethod
    def from_image(cls, image: Sequence[int]) -> Permutation:
        return cls(len(image), tuple(image))

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> Permutation:
        img = list(range(1, n + 1))
        for c in cycles:
            for a, b in zip(c, list(c[1:]) + [c[0]]):
                img[a - 1] = b
        return cls(n, tuple(img))

    def __call__(self, i: int) -> int:
        return self.image[i - 1]

    def inverse(self) -> Permutation:
        inv = [0] * self.n
        for i, v in enumerate(self.image, start=1):
            inv[v - 1] = i
        return Permutation(self.n, tuple(inv))

    def compose(self, other: Permutation) -> Permutation:
        """``self o other``: apply ``other`` first."""
        return Permutation(self.n, tuple(self.image[v - 1] for v in other.image))

    def cycles(self) -> list[tuple[int, ...]]:
        """Cycles, each starting at its least element, ordered by that element."""
        seen = [False] * (self.n + 1)
        out = []
        for start in range(1, self.n + 1):
            if seen[start]:
                continue
            cyc = []
            e = start
            while not seen[e]:
                seen[e] = True
                cyc.append(e)
                e = self.image[e - 1]
            out.append(tuple(cyc))
        return out

    @property
    def num_cycles(self) -> int:
        return len(self.cycles())

    def to_text(self) -> str:
        return " ".join(map(str, self.image))

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class IntegerPartition:
    """Multiplicity vector: ``mult[k - 1]`` is the number of parts of size ``k``."""

    n: int
    mult: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("integer partition of a non-positive number")
        if len(self.mult) != self.n or any(m < 0 for m in self.mult):
            raise DomainError(f"bad multiplicity vector {self.mult} for n={self.n}")
        if sum(k * m for k, m in enumerate(self.mult, start=1)) != self.n:
            raise DomainError(f"multiplicities {self.mult} do not sum to {self.n}")

    @classmethod
    def from_parts(cls, parts: Iterable[int], n: int | None = None) -> IntegerPartition:
        parts = list(parts)
        if n is None:
            n = sum(parts)
        if any(p < 1 or p > n for p in parts):
            raise DomainError(f"part sizes {parts} out of range for n={n}")
        c = Counter(parts)
        return cls(n, tuple(c.get(k, 0) for k in range(1, n + 1)))

    def __getitem__(self, k: int) -> int:
        """Multiplicity of part size ``k`` (zero outside ``1..n``)."""
        return self.mult[k - 1] if 1 <= k <= self.n else 0

    @property
    def num_parts(self) -> int:
        return sum(self.mult)

    def parts(self) -> list[int]:
        """Part sizes in descending order."""
        return [k for k in range(self.n, 0, -1) for _ in range(self.mult[k - 1])]

    def to_text(self) -> str:
        return " ".join(f"{k}^{m}" for k, m in enumerate(self.mult, start=1) if m)

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class GroupIndexing:
    """``n`` groups of ``j`` consecutive elements of ``[nj]``.

    Group ``i`` is ``{(i-1)j+1, ..., ij}`` and element ``e`` has type
    ``((e-1) mod j) + 1``.
    """

    n: int
    j: int

    def __post_init__(self):
        if self.n < 1 or self.j < 1:
            raise DomainError(f"group indexing needs n, j >= 1, got n={self.n}, j={self.j}")

    @property
    def size(self) -> int:
        return self.n * self.j

    def group(self, i: int) -> tuple[int, ...]:
        if not 1 <= i <= self.n:
            raise RangeError(f"group {i} outside 1..{self.n}")
        return tuple(range((i - 1) * self.j + 1, i * self.j + 1))

    def group_of(self, e: int) -> int:
        return (e - 1) // self.j + 1

    def type_of(self, e: int) -> int:
        return (e - 1) % self.j + 1

    def label(self, index: int, type_: int) -> int:
        """Global label of the type-``type_`` copy of within-type index ``index``."""
        return (index - 1) * self.j + type_


# -- projections -------------------------------------------------------------

def restrict_partition(B: SetPartition, m: int) -> SetPartition:
    if not 1 <= m <= B.n:
        raise RangeError(f"cannot restrict a partition of [{B.n}] to [{m}]")
    return SetPartition.from_blocks(([e for e in b if e <= m] for b in B.blocks), n=m)


def delete_element(B: SetPartition, k: int) -> SetPartition:
    """Remove ``k`` from its block and shift larger labels down by one."""
    if B.n < 2:
        raise DomainError("cannot delete from a partition of [1]")
    if not 1 <= k <= B.n:
        raise RangeError(f"element {k} outside 1..{B.n}")
    return SetPartition.from_blocks(
        ([e - (e > k) for e in b if e != k] for b in B.blocks), n=B.n - 1)


def delete_and_repair(sigma: Permutation, k: int) -> Permutation:
    """Delete ``k`` from ``sigma``, joining its predecessor to its successor.

    The surviving ground set is relabeled to ``[n-1]`` preserving order.
    """
    if sigma.n < 2:
        raise DomainError("cannot delete from a permutation of [1]")
    if not 1 <= k <= sigma.n:
        raise RangeError(f"element {k} outside 1..{sigma.n}")
    img = list(sigma.image)
    pred = img.index(k) + 1
    if pred != k:
        img[pred - 1] = img[k - 1]
    del img[k - 1]
    return Permutation(sigma.n - 1, tuple(v - (v > k) for v in img))


def delete_and_repair_tail(sigma: Permutation, m: int) -> Permutation:
    """Delete elements ``n, n-1, ..., m+1`` in turn, leaving a permutation of ``[m]``."""
    if not 1 <= m <= sigma.n:
        raise RangeError(f"cannot project a permutation of [{sigma.n}] to [{m}]")
    for k in range(sigma.n, m, -1):
        sigma = delete_and_repair(sigma, k)
    return sigma


def cycles_to_partition(sigma: Permutation) -> SetPartition:
    return SetPartition.from_blocks(sigma.cycles(), n=sigma.n)


def block_sizes_to_integer_partition(B: SetPartition) -> IntegerPartition:
    return IntegerPartition.from_parts(B.block_sizes(), n=B.n)


# -- counting ----------------------------------------------------------------

def count_set_partitions_for(lam: IntegerPartition) -> int:
    """Number of set partitions of ``[n]`` whose block sizes are ``lam``."""
    den = prod(factorial(k) ** m * factorial(m) for k, m in enumerate(lam.mult, start=1))
    return factorial(lam.n) // den


def count_permutations_for(B: SetPartition) -> int:
    """Number of permutations whose cycles are exactly the blocks of ``B``."""
    return prod(factorial(len(b) - 1) for b in B.blocks)


def rising_factorial(x, n: int) -> Fraction:
    """``x (x+1) ... (x+n-1)``; the empty product is 1."""
    if n < 0:
        raise DomainError(f"rising factorial of negative length {n}")
    x = Fraction(x)
    return prod((x + i for i in range(n)), start=Fraction(1))


def neg_rising_block_factor(alpha, k: int) -> Fraction:
    """``-(-alpha)^{(k)}``, i.e. ``alpha (1-alpha) (2-alpha) ... (k-1-alpha)``."""
    if k < 1:
        raise DomainError(f"block size must be positive, got {k}")
    alpha = Fraction(alpha)
    return alpha * rising_factorial(1 - alpha, k - 1)


# -- structural predicates ----------------------------------------------------

def is_j_even(B: SetPartition, j: int) -> bool:
    if j < 1 or B.n % j:
        raise DomainError(f"j={j} does not divide the ground set size {B.n}")
    return all(len(b) % j == 0 for b in B.blocks)


def is_j_balanced(B: SetPartition, g: GroupIndexing,
                  typing: Mapping[int, object] | None = None) -> bool:
    """True iff every block holds equally many elements of each type.

    ``typing`` overrides the canonical ``((e-1) mod j) + 1`` assignment; it
    must use exactly ``g.j`` distinct marks, each on ``g.n`` elements.
    """
    if B.n != g.size:
        raise DomainError(f"partition of [{B.n}] checked against {g.n} groups of {g.j}")
    if typing is None:
        type_of = g.type_of
        types = list(range(1, g.j + 1))
    else:
        if set(typing) != set(range(1, B.n + 1)):
            raise DomainError("typing must label every element of the ground set")
        counts = Counter(typing.values())
        if len(counts) != g.j or set(counts.values()) != {g.n}:
            raise DomainError(f"typing must use {g.j} marks on {g.n} elements each")
        type_of = typing.__getitem__
        types = list(counts)
    for b in B.blocks:
        c = Counter(type_of(e) for e in b)
        if len({c.get(t, 0) for t in types}) != 1:
            return False
    return True


# -- assembly ------------------------------------------------------------------

def assemble_balanced(pi: SetPartition, matchings: Sequence[Permutation],
                      g: GroupIndexing) -> SetPartition:
    """Glue ``j`` marked copies of ``pi`` together through the matchings.

    ``matchings[k - 2]`` sends copy 1 to copy ``k``; copy 1 maps to itself.
    The type-``k`` copy of index ``m`` gets global label ``(m-1)j + k``.
    """
    if pi.n != g.n:
        raise DomainError(f"group-level partition of [{pi.n}] but {g.n} groups")
    if len(matchings) != g.j - 1:
        raise DomainError(f"need {g.j - 1} matchings, got {len(matchings)}")
    if any(s.n != g.n for s in matchings):
        raise DomainError("every matching must be a permutation of [n]")
    blocks = []
    for b in pi.blocks:
        out = [g.label(m, 1) for m in b]
        for k, s in enumerate(matchings, start=2):
            out.extend(g.label(s(m), k) for m in b)
        blocks.append(out)
    return SetPartition.from_blocks(blocks, n=g.size)


def assemble_even(pi: SetPartition, sigma: Permutation, g: GroupIndexing) -> SetPartition:
    """Send each group of elements through ``sigma`` and merge along ``pi``."""
    if pi.n != g.n:
        raise DomainError(f"group-level partition of [{pi.n}] but {g.n} groups")
    if sigma.n != g.size:
        raise DomainError(f"permutation of [{sigma.n}] but ground set has {g.size} elements")
    return SetPartition.from_blocks(
        ([sigma(l) for k in b for l in g.group(k)] for b in pi.blocks), n=g.size)


# -- text formats ---------------------------------------------------------------

def parse_partition(text: str, n: int | None = None) -> SetPartition:
    """Parse ``"1 3 5|2 4"``; input must already be canonical."""
    try:
        blocks = [tuple(int(t) for t in part.split()) for part in text.strip().split("|")]
    except ValueError as exc:
        raise DomainError(f"cannot parse partition {text!r}: {exc}") from None
    if n is None:
        n = sum(len(b) for b in blocks)
    try:
        B = SetPartition(n, tuple(blocks))
    except DomainError as exc:
        raise DomainError(f"non-canonical or invalid partition {text!r}: {exc}") from None
    return B


def parse_permutation(text: str) -> Permutation:
    """Parse the one-line image form ``"2 3 1"``."""
    try:
        image = tuple(int(t) for t in text.split())
    except ValueError as exc:
        raise DomainError(f"cannot parse permutation {text!r}: {exc}") from None
    return Permutation(len(image), image)


def parse_integer_partition(text: str) -> IntegerPartition:
    """Parse ``"1^2 3^1"`` (part^multiplicity, part sizes ascending)."""
    pairs = []
    try:
        for tok in text.split():
            k, m = tok.split("^")
            pairs.append((int(k), int(m)))
    except ValueError as exc:
        raise DomainError(f"cannot parse integer partition {text!r}: {exc}") from None
    sizes = [k for k, _ in pairs]
    if sizes != sorted(set(sizes)) or any(m < 1 for _, m in pairs):
        raise DomainError(f"non-canonical integer partition {text!r}")
    return IntegerPartition.from_parts(k for k, m in pairs for _ in range(m))
