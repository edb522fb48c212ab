"""Exhaustive exact-arithmetic ground truth.

Nothing in here trusts a closed form: supports are enumerated, the seating
rules are expanded choice by choice, and pushforwards are summed term by
term.  Floating point is used only for chi-square tail probabilities.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Any, Callable, Iterable, Mapping, Sequence

from scipy import stats

from .combinatorics import (
    GroupIndexing,
    IntegerPartition,
    Permutation,
    SetPartition,
    assemble_balanced,
    assemble_even,
    is_j_balanced,
    is_j_even,
)
from .distributions import ExactDist, canonical_text, joint_balanced_pmf, joint_even_pmf
from .errors import DomainError, ResourceError
from .params import ModelParams


@dataclass(frozen=True)
class EnumerationBudget:
    max_objects: int = 10**6
    max_ground_set: int = 10

    def check(self, ground: int, objects: int, what: str):
        if ground > self.max_ground_set:
            raise ResourceError(
                f"{what}: ground set of {ground} exceeds the budget of {self.max_ground_set}")
        if objects > self.max_objects:
            raise ResourceError(f"{what}: {objects} objects exceed the budget of {self.max_objects}")


DEFAULT_BUDGET = EnumerationBudget()


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


# -- enumeration -------------------------------------------------------------------

def _restricted_growth_strings(n: int):
    """Restricted growth strings of length ``n`` in lexicographic order."""
    a = [0] * n
    top = [0] * n  # top[i] = max(a[0..i])
    while True:
        yield tuple(a)
        i = n - 1
        while i > 0 and a[i] > top[i - 1]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        top[i] = max(top[i - 1], a[i])
        for k in range(i + 1, n):
            a[k] = 0
            top[k] = top[i]


def enumerate_partitions(n: int, budget: EnumerationBudget | None = None) -> list[SetPartition]:
    """All set partitions of ``[n]`` in restricted-growth-string order."""
    budget = budget or DEFAULT_BUDGET
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    budget.check(n, bell_number(n), "set partitions")
    return [SetPartition.from_labels(a) for a in _restricted_growth_strings(n)]


def enumerate_even(n: int, j: int, budget: EnumerationBudget | None = None) -> list[SetPartition]:
    return [B for B in enumerate_partitions(n * j, budget) if is_j_even(B, j)]


def enumerate_balanced(n: int, j: int, budget: EnumerationBudget | None = None) -> list[SetPartition]:
    g = GroupIndexing(n, j)
    return [B for B in enumerate_partitions(n * j, budget) if is_j_balanced(B, g)]


def enumerate_permutations(n: int, budget: EnumerationBudget | None = None) -> list[Permutation]:
    budget = budget or DEFAULT_BUDGET
    budget.check(n, factorial(n), "permutations")
    return [Permutation(n, p) for p in itertools.permutations(range(1, n + 1))]


def enumerate_integer_partitions(n: int, j: int = 1) -> list[IntegerPartition]:
    """Integer partitions of ``n * j`` whose parts are all multiples of ``j``."""

    def parts(rest, largest):
        if rest == 0:
            yield []
            return
        for k in range(min(rest, largest), 0, -1):
            for tail in parts(rest - k, k):
                yield [k] + tail

    return [IntegerPartition.from_parts([k * j for k in p], n=n * j) for p in parts(n, n)]


def type_preserving_permutations(g: GroupIndexing,
                                 budget: EnumerationBudget | None = None) -> list[Permutation]:
    """Permutations of ``[nj]`` that map every element to one of the same type."""
    budget = budget or DEFAULT_BUDGET
    budget.check(g.size, factorial(g.n) ** g.j, "type-preserving permutations")
    per_type = [list(itertools.permutations(range(g.n))) for _ in range(g.j)]
    out = []
    for choice in itertools.product(*per_type):
        img = [0] * g.size
        for t, p in enumerate(choice, start=1):
            for idx, target in enumerate(p, start=1):
                img[g.label(idx, t) - 1] = g.label(target + 1, t)
        out.append(Permutation(g.size, tuple(img)))
    return out


def ordered_group_images(n: int, j: int, budget: EnumerationBudget | None = None):
    """Sequences of ``n`` disjoint ``j``-subsets covering ``[nj]``.

    Each sequence stands for the ``(j!)^n`` permutations that send group ``i``
    onto subset ``i``; :func:`assemble_even` cannot tell them apart.
    """
    budget = budget or DEFAULT_BUDGET
    total = factorial(n * j) // factorial(j) ** n
    budget.check(n * j, total, "ordered group images")

    def rec(remaining):
        if not remaining:
            yield ()
            return
        for sub in itertools.combinations(remaining, j):
            rest = tuple(x for x in remaining if x not in sub)
            for tail in rec(rest):
                yield (sub,) + tail

    yield from rec(tuple(range(1, n * j + 1)))


# -- exact seating-tree expansion ---------------------------------------------------

def _canonical_positions(pos: Sequence[int]) -> SetPartition:
    return SetPartition.from_labels(pos)


def _expand_displacements(pos: list[int], s: int, j: int, rule: str):
    """Yield ``(positions, probability)`` for every outcome of the displacement step.

    ``pos`` holds a table index per unit (0-based), with ``-1`` for members of
    the arriving group; ``s`` groups are already seated.
    """
    ranges = []
    for i in range(2, j + 1):
        if rule == "balanced":
            ranges.append([r * j + (i - 1) for r in range(s + 1)])
        else:
            ranges.append(list(range(s * j + i - 1)))
    weight = Fraction(1)
    for r in ranges:
        weight /= len(r)
    for picks in itertools.product(*ranges):
        p = list(pos)
        for i, target in zip(range(2, j + 1), picks):
            me = s * j + i - 1
            p[me], p[target] = p[target], p[me]
        yield p, weight


def seating_tree_exact(n: int, j: int, params: ModelParams, rule: str,
                       budget: EnumerationBudget | None = None) -> ExactDist:
    """Exact law of the sequential balanced or even seating rule on ``[nj]``.

    Every displacement pick and every table choice is expanded with its exact
    probability; states reaching the same partition are merged, which is
    harmless because later steps only see block membership.
    """
    if rule not in ("balanced", "even"):
        raise DomainError(f"unknown seating rule {rule!r}")
    if n < 1 or j < 1:
        raise DomainError("need n, j >= 1")
    budget = budget or DEFAULT_BUDGET
    budget.check(n * j, 0, "seating tree")
    states: dict[SetPartition, Fraction] = {SetPartition.single_block(j): Fraction(1)}
    branches = 0
    for s in range(1, n):
        nxt: dict[SetPartition, Fraction] = {}
        for B, p in states.items():
            pos = list(B.labels()) + [-1] * j
            for moved, w in _expand_displacements(pos, s, j, rule):
                seated = [t for t in moved if t >= 0]
                counts = Counter(seated)
                K = len(counts)
                total = s * j + params.theta
                options = [(t, (c - params.alpha) / total) for t, c in counts.items()]
                options.append((K, params.new_block_weight(K) / total))
                for table, q in options:
                    branches += 1
                    if q == 0:
                        continue
                    out = _canonical_positions([table if t < 0 else t for t in moved])
                    nxt[out] = nxt.get(out, Fraction(0)) + p * w * q
            if branches > budget.max_objects:
                raise ResourceError(f"seating tree exceeded {budget.max_objects} branches")
        states = nxt
    return ExactDist(states)


# -- pushforwards of the two-step constructions ---------------------------------------

def two_step_balanced_exact(n: int, j: int, params: ModelParams,
                            budget: EnumerationBudget | None = None) -> ExactDist:
    """Law of the assembled balanced partition, summed over every ``(pi, matchings)``."""
    budget = budget or DEFAULT_BUDGET
    g = GroupIndexing(n, j)
    budget.check(n * j, bell_number(n) * factorial(n) ** (j - 1), "two-step balanced")
    perms = enumerate_permutations(n, budget)
    out: dict[SetPartition, Fraction] = {}
    for pi in enumerate_partitions(n, budget):
        for ms in itertools.product(perms, repeat=j - 1):
            w = joint_balanced_pmf(pi, ms, g, params).exact
            B = assemble_balanced(pi, ms, g)
            out[B] = out.get(B, Fraction(0)) + w
    return ExactDist(out)


def two_step_even_exact(n: int, j: int, params: ModelParams,
                        budget: EnumerationBudget | None = None) -> ExactDist:
    """Law of the assembled even partition.

    Permutations of ``[nj]`` are enumerated one class of group images at a
    time; the joint law is evaluated on the class representative and scaled
    by the class size ``(j!)^n``.
    """
    budget = budget or DEFAULT_BUDGET
    g = GroupIndexing(n, j)
    images = list(ordered_group_images(n, j, budget))
    budget.check(n * j, bell_number(n) * len(images), "two-step even")
    mult = factorial(j) ** n
    out: dict[SetPartition, Fraction] = {}
    for pi in enumerate_partitions(n, budget):
        for img in images:
            sigma = Permutation(n * j, tuple(x for sub in img for x in sub))
            w = joint_even_pmf(pi, sigma, params).exact * mult
            B = assemble_even(pi, sigma, g)
            out[B] = out.get(B, Fraction(0)) + w
    return ExactDist(out)


# -- comparisons ---------------------------------------------------------------------------

def conditioned_distribution(base: ExactDist, predicate: Callable[[Any], bool]) -> ExactDist:
    kept = {x: p for x, p in base.items() if predicate(x)}
    if sum(kept.values(), Fraction(0)) == 0:
        raise DomainError("conditioning event has zero probability")
    return ExactDist.from_weights(kept)


def pushforward(base: ExactDist, f: Callable[[Any], Any]) -> ExactDist:
    out: dict[Any, Fraction] = {}
    for x, p in base.items():
        y = f(x)
        out[y] = out.get(y, Fraction(0)) + p
    return ExactDist(out)


def total_variation(p: ExactDist | Mapping, q: ExactDist | Mapping) -> Fraction:
    """Half the L1 distance; objects missing from one side count as zero."""
    pw = dict(p.items())
    qw = dict(q.items())
    keys = set(pw) | set(qw)
    return sum((abs(pw.get(k, 0) - qw.get(k, 0)) for k in keys), Fraction(0)) / 2


# -- projective consistency -------------------------------------------------------------------

@dataclass(frozen=True)
class Family:
    """A sequence of finite laws: ``support(n)`` and a pmf returning exact values."""

    name: str
    support: Callable[[int], Iterable[Any]]
    pmf: Callable[[Any], Fraction]


@dataclass
class ConsistencyReport:
    family: str
    n: int
    checked: int
    mismatches: list[tuple[str, Fraction, Fraction]] = field(default_factory=list)
    stray: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches and not self.stray


def consistency_check(family: Family, projection: Callable[[Any], Any], n: int) -> ConsistencyReport:
    """Compare the size-``n`` law with the image of the size-``n+1`` law under ``projection``."""
    small = {x: family.pmf(x) for x in family.support(n)}
    pushed: dict[Any, Fraction] = {}
    for y in family.support(n + 1):
        x = projection(y)
        pushed[x] = pushed.get(x, Fraction(0)) + family.pmf(y)
    rep = ConsistencyReport(family.name, n, len(small))
    for x, p in small.items():
        q = pushed.pop(x, Fraction(0))
        if p != q:
            rep.mismatches.append((canonical_text(x), p, q))
    rep.stray = [canonical_text(x) for x, q in pushed.items() if q != 0]
    return rep


@dataclass
class ExchangeabilityReport:
    name: str
    checked: int
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def exchangeability_check(name: str, support: Iterable[Any], pmf: Callable[[Any], Fraction],
                          group: Iterable[Permutation],
                          act: Callable[[Permutation, Any], Any] | None = None) -> ExchangeabilityReport:
    """Check ``pmf(g . x) == pmf(x)`` for every ``x`` in the support and ``g`` in the group."""
    act = act or (lambda g, x: x.relabel(g))
    table = {x: pmf(x) for x in support}
    group = list(group)
    rep = ExchangeabilityReport(name, len(table) * len(group))
    for x, p in table.items():
        for g in group:
            y = act(g, x)
            q = table[y] if y in table else pmf(y)
            if q != p:
                rep.violations.append((canonical_text(x), g.to_text()))
    return rep


# -- empirical comparison ---------------------------------------------------------------------

@dataclass
class EmpiricalReport:
    count: int
    frequencies: dict
    tv: float
    chi2: float
    dof: int
    p_value: float
    outside_support: int


def empirical_vs_exact(samples: Iterable[Any] | Mapping[Any, int], exact: ExactDist,
                       min_per_point: int = 10) -> EmpiricalReport:
    """TV distance and Pearson chi-square of a sample against an exact law.

    ``samples`` may be a sequence of objects or a mapping of object counts.
    Cells of zero exact probability are left out of the chi-square; any
    sample landing there makes the statistic infinite.
    """
    counts = Counter(samples) if not isinstance(samples, Mapping) else Counter(dict(samples))
    N = sum(counts.values())
    if N < min_per_point * len(exact):
        raise DomainError(f"{N} samples is fewer than {min_per_point} x support size {len(exact)}")
    freqs = {x: Fraction(c, N) for x, c in counts.items()}
    tv = total_variation(freqs, exact)
    outside = sum(c for x, c in counts.items() if exact.prob(x) == 0)
    cells = [(counts.get(x, 0), p) for x, p in exact.items() if p > 0]
    if outside:
        chi2, pval = float("inf"), 0.0
    else:
        chi2 = sum((c - N * float(p)) ** 2 / (N * float(p)) for c, p in cells)
        pval = float(stats.chi2.sf(chi2, len(cells) - 1)) if len(cells) > 1 else 1.0
    return EmpiricalReport(N, freqs, float(tv), chi2, len(cells) - 1, pval, outside)
