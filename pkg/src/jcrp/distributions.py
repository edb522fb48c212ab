"""Closed-form probability mass functions for the partition models.

Each evaluator builds its value as a list of numerator and denominator
factors and then evaluates it twice, once as an exact :class:`Fraction`
and once as a sum of logarithms; ``exact=False`` skips the rational product,
which is the path to use for large ``n``.

Formulas containing ``(theta/alpha)^{(K)}`` are evaluated through the
identity ``(theta/alpha)^{(K)} alpha^K = theta (theta+alpha) ... (theta+(K-1)alpha)``.
It is exact whenever ``alpha != 0`` and gives the Ewens(theta) law at
``alpha = 0``. The leading ``theta`` is cancelled against the first factor
of ``theta^{(n)}``, so ``theta = 0`` with ``alpha > 0`` is also handled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from types import MappingProxyType
from typing import Any, Callable, Iterable, Mapping, Sequence

from .combinatorics import (
    GroupIndexing,
    IntegerPartition,
    Permutation,
    SetPartition,
    cycles_to_partition,
    is_j_balanced,
    is_j_even,
)
from .errors import DomainError, ParameterError
from .params import ModelParams, as_fraction


@dataclass(frozen=True)
class ProbValue:
    exact: Fraction | None = None
    log_value: float | None = None

    def __post_init__(self):
        if self.exact is None and self.log_value is None:
            raise ValueError("ProbValue needs an exact or a log value")
        if self.exact is not None and not 0 <= self.exact <= 1:
            raise DomainError(f"probability {self.exact} outside [0, 1]")

    def __float__(self) -> float:
        if self.exact is not None:
            return float(self.exact)
        return math.exp(self.log_value)


class _Terms:
    """A product of rational factors kept unevaluated until the end."""

    def __init__(self):
        self.num: list[Fraction] = []
        self.den: list[Fraction] = []
        self.num_fact: list[int] = []
        self.den_fact: list[int] = []

    def mul(self, *xs) -> _Terms:
        self.num.extend(Fraction(x) for x in xs)
        return self

    def div(self, *xs) -> _Terms:
        self.den.extend(Fraction(x) for x in xs)
        return self

    def mul_factorial(self, k: int, times: int = 1) -> _Terms:
        self.num_fact.extend([k] * times)
        return self

    def div_factorial(self, k: int, times: int = 1) -> _Terms:
        self.den_fact.extend([k] * times)
        return self

    def evaluate(self, exact: bool = True) -> ProbValue:
        if any(x == 0 for x in self.num):
            return ProbValue(Fraction(0) if exact else None, -math.inf)
        if any(x <= 0 for x in self.num + self.den):
            raise DomainError("negative factor in a probability; parameters are out of regime")
        log_value = (sum(math.log(x) for x in self.num) - sum(math.log(x) for x in self.den)
                     + sum(math.lgamma(k + 1) for k in self.num_fact)
                     - sum(math.lgamma(k + 1) for k in self.den_fact))
        value = None
        if exact:
            top = math.prod(self.num, start=Fraction(1))
            bot = math.prod(self.den, start=Fraction(1))
            top *= math.prod(factorial(k) for k in self.num_fact)
            bot *= math.prod(factorial(k) for k in self.den_fact)
            value = top / bot
        return ProbValue(value, log_value)


def _crp_terms(terms: _Terms, alpha: Fraction, theta: Fraction,
               sizes: Sequence[int], n: int) -> _Terms:
    """Multiply in the (alpha, theta) weight of a partition of ``[n]`` with these block sizes."""
    K = len(sizes)
    terms.mul(*(theta + i * alpha for i in range(1, K)))
    for k in sizes:
        terms.mul(*(i - alpha for i in range(1, k)))
    terms.div(*(theta + i for i in range(1, n)))
    return terms


def _check_positive(x, name: str) -> Fraction:
    x = as_fraction(x)
    if x <= 0:
        raise ParameterError(f"{name} must be positive, got {x}")
    return x


def _check_params(params) -> ModelParams:
    if not isinstance(params, ModelParams):
        raise ParameterError(f"expected ModelParams, got {type(params).__name__}")
    return params


def _group_counts(B: SetPartition, j: int) -> list[int]:
    return [len(b) // j for b in B.blocks]


def _check_grouped(B: SetPartition, g: GroupIndexing):
    if B.n != g.size:
        raise DomainError(f"partition of [{B.n}] does not match {g.n} groups of {g.j}")


def _check_multiple_parts(m: IntegerPartition, j: int) -> int:
    if j < 1 or m.n % j:
        raise DomainError(f"j={j} does not divide {m.n}")
    if any(m[k] for k in range(1, m.n + 1) if k % j):
        raise DomainError(f"integer partition {m} has parts that are not multiples of {j}")
    return m.n // j


# -- one-parameter Ewens ---------------------------------------------------------

def ewens_integer_pmf(lam: IntegerPartition, alpha, exact: bool = True) -> ProbValue:
    """Ewens sampling formula on integer partitions of ``n``."""
    alpha = _check_positive(alpha, "alpha")
    t = _Terms().mul_factorial(lam.n).div(*(alpha + i for i in range(lam.n)))
    for k, m in enumerate(lam.mult, start=1):
        if m:
            t.mul(*([alpha] * m)).div(*([k] * m)).div_factorial(m)
    return t.evaluate(exact)


def ewens_partition_pmf(B: SetPartition, alpha, exact: bool = True) -> ProbValue:
    alpha = _check_positive(alpha, "alpha")
    t = _Terms().mul(*([alpha] * B.num_blocks)).div(*(alpha + i for i in range(B.n)))
    for k in B.block_sizes():
        t.mul_factorial(k - 1)
    return t.evaluate(exact)


def ewens_permutation_pmf(sigma: Permutation, alpha, exact: bool = True) -> ProbValue:
    """``alpha^{#cycles} / alpha^{(n)}``.

    The power (not rising-factorial) numerator is the one that sums to one
    over the symmetric group.
    """
    alpha = _check_positive(alpha, "alpha")
    t = _Terms().mul(*([alpha] * sigma.num_cycles)).div(*(alpha + i for i in range(sigma.n)))
    return t.evaluate(exact)


# -- two-parameter model and its integer-partition relatives --------------------------

def two_param_partition_pmf(B: SetPartition, params: ModelParams, exact: bool = True) -> ProbValue:
    params = _check_params(params)
    return _crp_terms(_Terms(), params.alpha, params.theta, B.block_sizes(), B.n).evaluate(exact)


def _grouped_integer_terms(m: IntegerPartition, j: int, params: ModelParams,
                           multiplicity_power: int) -> _Terms:
    n = _check_multiple_parts(m, j)
    sizes = [k // j for k in m.parts()]
    t = _crp_terms(_Terms().mul_factorial(n), params.alpha, params.theta, sizes, n)
    for k in range(j, m.n + 1, j):
        c = m[k]
        if c:
            t.div_factorial(k // j, c).div_factorial(c, multiplicity_power)
    return t


def balanced_integer_pmf(m: IntegerPartition, j: int, params: ModelParams,
                         exact: bool = True) -> ProbValue:
    """Block-size law attached to balanced partitions.

    The multiplicity factorials carry the power ``j - 1``.  For ``j >= 3``
    this does not sum to one once some group size repeats; see
    :func:`even_integer_pmf` for the normalised form.
    """
    params = _check_params(params)
    return _grouped_integer_terms(m, j, params, max(j - 1, 0)).evaluate(exact)


def even_integer_pmf(m: IntegerPartition, j: int, params: ModelParams,
                     exact: bool = True) -> ProbValue:
    """Block-size law attached to ``j``-even partitions."""
    params = _check_params(params)
    return _grouped_integer_terms(m, j, params, 1).evaluate(exact)


# -- balanced partitions ---------------------------------------------------------------

def balanced_partition_pmf(B: SetPartition, g: GroupIndexing, params: ModelParams,
                           exact: bool = True) -> ProbValue:
    params = _check_params(params)
    _check_grouped(B, g)
    if not is_j_balanced(B, g):
        raise DomainError(f"{B} is not {g.j}-balanced")
    j, n = g.j, g.n
    ks = _group_counts(B, j)
    t = _crp_terms(_Terms(), params.alpha / j, params.theta / j, ks, n)
    for k in ks:
        t.mul_factorial(k, j - 1)
    return t.div_factorial(n, j - 1).evaluate(exact)


def balanced_partition_limit_pmf(B: SetPartition, g: GroupIndexing, lam,
                                 exact: bool = True) -> ProbValue:
    """Balanced law after sending ``kappa -> 0`` with ``theta -> lam``."""
    lam = _check_positive(lam, "lambda")
    _check_grouped(B, g)
    if not is_j_balanced(B, g):
        raise DomainError(f"{B} is not {g.j}-balanced")
    j, n = g.j, g.n
    ks = _group_counts(B, j)
    t = _Terms().mul(*([lam / j] * len(ks))).div(*(lam / j + i for i in range(n)))
    for k in ks:
        t.mul(*([k] * (j - 1))).mul_factorial(k - 1, j)
    return t.div_factorial(n, j - 1).evaluate(exact)


# -- even partitions ---------------------------------------------------------------------

def _check_even(B: SetPartition, g: GroupIndexing):
    _check_grouped(B, g)
    if not is_j_even(B, g.j):
        raise DomainError(f"{B} is not {g.j}-even")


def even_partition_pmf(B: SetPartition, g: GroupIndexing, params: ModelParams,
                       exact: bool = True) -> ProbValue:
    """Law of the even seating rule; leading power of ``j`` is ``#blocks - 1``."""
    params = _check_params(params)
    _check_even(B, g)
    j, n = g.j, g.n
    ks = _group_counts(B, j)
    t = _crp_terms(_Terms(), params.alpha / j, params.theta / j, ks, n)
    t.mul(*([j] * (len(ks) - 1))).mul_factorial(n - 1).div_factorial(n * j - 1)
    for k in ks:
        t.mul_factorial(j * k - 1).div_factorial(k - 1)
    return t.evaluate(exact)


def even_partition_limit_pmf(B: SetPartition, g: GroupIndexing, lam,
                             exact: bool = True) -> ProbValue:
    """Even law after sending ``kappa -> 0`` with ``theta -> lam``.

    Equals ``Gamma(n) lam^K prod Gamma(#b) / (j Gamma(nj) (lam/j)^{(n)})``.
    """
    lam = _check_positive(lam, "lambda")
    _check_even(B, g)
    j, n = g.j, g.n
    t = _Terms().mul_factorial(n - 1).div_factorial(n * j - 1).div(j)
    t.mul(*([lam] * B.num_blocks)).div(*(lam / j + i for i in range(n)))
    for size in B.block_sizes():
        t.mul_factorial(size - 1)
    return t.evaluate(exact)


# -- joint laws on the product systems -------------------------------------------------------

def joint_balanced_pmf(pi: SetPartition, matchings: Sequence[Permutation], g: GroupIndexing,
                       params: ModelParams, exact: bool = True) -> ProbValue:
    """Law of ``(pi, sigma_2, ..., sigma_j)``; it does not depend on the matchings."""
    params = _check_params(params)
    if pi.n != g.n or len(matchings) != g.j - 1 or any(s.n != g.n for s in matchings):
        raise DomainError("partition and matchings do not fit the group indexing")
    t = _crp_terms(_Terms(), params.alpha, params.theta, pi.block_sizes(), pi.n)
    return t.div_factorial(pi.n, g.j - 1).evaluate(exact)


def _group_size(n: int, big: int) -> int:
    if big % n:
        raise DomainError(f"permutation of [{big}] is not a multiple of {n} groups")
    return big // n


def joint_even_pmf(pi: SetPartition, sigma: Permutation, params: ModelParams,
                   exact: bool = True) -> ProbValue:
    """Law of ``(pi, sigma)`` with ``sigma`` uniform on ``S_{nj}``."""
    params = _check_params(params)
    _group_size(pi.n, sigma.n)
    t = _crp_terms(_Terms(), params.alpha, params.theta, pi.block_sizes(), pi.n)
    return t.div_factorial(sigma.n).evaluate(exact)


# -- permutation laws ---------------------------------------------------------------------------

def balanced_permutation_pmf(sigma1: Permutation, matchings: Sequence[Permutation],
                             g: GroupIndexing, params: ModelParams,
                             with_sigma0: bool = False, exact: bool = True) -> ProbValue:
    params = _check_params(params)
    if sigma1.n != g.n or len(matchings) != g.j - 1 or any(s.n != g.n for s in matchings):
        raise DomainError("permutations do not fit the group indexing")
    sizes = cycles_to_partition(sigma1).block_sizes()
    t = _crp_terms(_Terms(), params.alpha, params.theta, sizes, g.n)
    for k in sizes:
        t.div_factorial(k - 1)
    t.div_factorial(g.n, g.j - 1)
    if with_sigma0:
        t.div_factorial(g.j - 1)
    return t.evaluate(exact)


def even_permutation_pair_pmf(sigma0: Permutation, sigma: Permutation, params: ModelParams,
                              exact: bool = True) -> ProbValue:
    params = _check_params(params)
    _group_size(sigma0.n, sigma.n)
    sizes = cycles_to_partition(sigma0).block_sizes()
    t = _crp_terms(_Terms(), params.alpha, params.theta, sizes, sigma0.n)
    for k in sizes:
        t.div_factorial(k - 1)
    return t.div_factorial(sigma.n).evaluate(exact)


def even_permutation_pmf(sigma: Permutation, g: GroupIndexing, params: ModelParams,
                         exact: bool = True) -> ProbValue:
    """Law on permutations of ``[nj]`` whose cycle lengths are multiples of ``j``."""
    params = _check_params(params)
    B = cycles_to_partition(sigma)
    _check_even(B, g)
    j, n = g.j, g.n
    ks = _group_counts(B, j)
    t = _crp_terms(_Terms(), params.alpha / j, params.theta / j, ks, n)
    t.mul(*([j] * (len(ks) - 1))).mul_factorial(n - 1).div_factorial(n * j - 1)
    for k in ks:
        t.div_factorial(k - 1)
    return t.evaluate(exact)


# -- the gamma-function identity over even partitions ------------------------------------------------

def gamma_identity_lhs(n: int, k: int, alpha, budget=None) -> Fraction:
    """``(1/(nk)!) sum over k-even partitions of [nk] of alpha^{#blocks} prod Gamma(#b)``.

    Computed by enumerating the partitions; raises ResourceError past the budget.
    """
    from .oracle import enumerate_even

    if n < 1 or k < 1:
        raise DomainError("need n, k >= 1")
    alpha = as_fraction(alpha)
    total = Fraction(0)
    for B in enumerate_even(n, k, budget):
        w = alpha ** B.num_blocks
        for size in B.block_sizes():
            w *= factorial(size - 1)
        total += w
    return total / factorial(n * k)


def gamma_identity_rhs(n: int, k: int, alpha) -> Fraction:
    """``(alpha/k)^{(n)} / n!``."""
    alpha = as_fraction(alpha)
    return math.prod((alpha / k + i for i in range(n)), start=Fraction(1)) / factorial(n)


# -- finite distribution tables ---------------------------------------------------------------------------

def canonical_text(obj: Any) -> str:
    if isinstance(obj, tuple):
        return " ; ".join(canonical_text(x) for x in obj)
    return obj.to_text()


class ExactDist:
    """Immutable probability table over canonical combinatorial objects.

    Weights are Fractions, or floats when a table was read back from
    log-probability records.  An all-exact table must sum to exactly one.
    """

    def __init__(self, weights: Mapping[Any, Fraction | float]):
        w = {}
        for obj, p in weights.items():
            if p < 0:
                raise DomainError(f"negative weight {p} on {canonical_text(obj)}")
            w[obj] = p
        self._w = MappingProxyType(w)
        if self.is_exact and sum(w.values(), Fraction(0)) != 1:
            raise DomainError(f"exact weights sum to {sum(w.values(), Fraction(0))}, not 1")

    @classmethod
    def from_pmf(cls, support: Iterable[Any], pmf: Callable[[Any], ProbValue]) -> ExactDist:
        return cls({x: pmf(x).exact for x in support})

    @classmethod
    def from_weights(cls, weights: Mapping[Any, Fraction]) -> ExactDist:
        """Normalise non-negative exact weights."""
        total = sum(weights.values(), Fraction(0))
        if total <= 0:
            raise DomainError("weights have no positive mass")
        return cls({x: Fraction(p) / total for x, p in weights.items()})

    @property
    def is_exact(self) -> bool:
        return all(isinstance(p, (Fraction, int)) for p in self._w.values())

    @property
    def support(self) -> list:
        return sorted(self._w, key=canonical_text)

    def prob(self, obj) -> Fraction | float:
        return self._w.get(obj, Fraction(0))

    def items(self):
        return ((x, self._w[x]) for x in self.support)

    def total(self):
        return sum(self._w.values(), Fraction(0))

    def __len__(self) -> int:
        return len(self._w)

    def __contains__(self, obj) -> bool:
        return obj in self._w

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactDist):
            return NotImplemented
        keys = set(self._w) | set(other._w)
        return all(self.prob(k) == other.prob(k) for k in keys)

    def __repr__(self) -> str:
        return f"ExactDist({len(self)} points)"

    def to_records(self, log: bool = False) -> list[dict]:
        """Serialisable records in canonical-text order."""
        out = []
        for x, p in self.items():
            if log or not isinstance(p, (Fraction, int)):
                out.append({"object": canonical_text(x),
                            "log_prob": math.log(p) if p > 0 else float("-inf")})
            else:
                p = Fraction(p)
                out.append({"object": canonical_text(x),
                            "prob": {"num": str(p.numerator), "den": str(p.denominator)}})
        return out

    @classmethod
    def from_records(cls, records: Iterable[Mapping], parse: Callable[[str], Any]) -> ExactDist:
        w = {}
        for r in records:
            if "prob" in r:
                w[parse(r["object"])] = Fraction(int(r["prob"]["num"]), int(r["prob"]["den"]))
            else:
                w[parse(r["object"])] = math.exp(r["log_prob"])
        return cls(w)
