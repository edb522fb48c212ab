"""Exact audit of stated properties that the implementation does not rely on.

Each audit entry computes both sides of a statement with exact rationals and
reports what it finds.  Nothing here raises when a statement turns out to be
false; the verdict is data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, prod
from typing import Callable, Iterable, Sequence

from .combinatorics import (
    GroupIndexing,
    IntegerPartition,
    SetPartition,
    block_sizes_to_integer_partition,
    is_j_balanced,
    is_j_even,
    rising_factorial,
)
from .distributions import (
    ExactDist,
    balanced_integer_pmf,
    balanced_partition_limit_pmf,
    balanced_partition_pmf,
    even_integer_pmf,
    even_partition_limit_pmf,
    even_partition_pmf,
    ewens_permutation_pmf,
    two_param_partition_pmf,
)
from .oracle import (
    EnumerationBudget,
    conditioned_distribution,
    enumerate_balanced,
    enumerate_even,
    enumerate_integer_partitions,
    enumerate_partitions,
    enumerate_permutations,
    pushforward,
    total_variation,
    two_step_balanced_exact,
    two_step_even_exact,
)
from .params import ModelParams


def frac_text(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass
class AuditRecord:
    claim: str
    inputs: dict
    values: dict
    verdict: str
    consistent: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return {"claim": self.claim, "inputs": self.inputs,
                "values": {k: frac_text(v) if isinstance(v, (Fraction, int)) else v
                           for k, v in self.values.items()},
                "verdict": self.verdict, "consistent": self.consistent, "note": self.note}


@dataclass
class AuditReport:
    records: list[AuditRecord] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return all(r.consistent for r in self.records)

    def claims(self) -> set[str]:
        return {r.claim for r in self.records}

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(r.to_dict(), sort_keys=True) for r in self.records)

    def summary(self) -> str:
        lines = []
        for claim in sorted(self.claims()):
            rs = [r for r in self.records if r.claim == claim]
            verdicts = sorted({r.verdict for r in rs})
            lines.append(f"{claim}: {len(rs)} cases, verdicts {', '.join(verdicts)}"
                         + ("" if all(r.consistent for r in rs) else "  [CROSS-CHECK FAILED]"))
        lines.append(f"cross-checks consistent: {self.consistent}")
        return "\n".join(lines)


# -- alternative readings of printed formulas ---------------------------------------------

def permutation_rising_reading(sigma, alpha) -> Fraction:
    """``alpha^{(#cycles)} / alpha^{(n)}``: the rising-factorial reading of the permutation law."""
    alpha = Fraction(alpha)
    return rising_factorial(alpha, sigma.num_cycles) / rising_factorial(alpha, sigma.n)


def even_pmf_with_j_power(B: SetPartition, j: int, params: ModelParams,
                          power: Callable[[int, int], int]) -> Fraction:
    """Even-partition law with the leading ``j^{#blocks-1}`` replaced by ``j^{power(K, n)}``."""
    n = B.n // j
    K = B.num_blocks
    base = even_partition_pmf(B, GroupIndexing(n, j), params).exact
    return base * Fraction(j) ** (power(K, n) - (K - 1))


def even_limit_as_displayed(B: SetPartition, j: int, lam) -> Fraction:
    """``Gamma(n) lam^K prod Gamma(#b) / (Gamma(nj) (lam/j)^{(n)})`` with no ``1/j``."""
    lam = Fraction(lam)
    n = B.n // j
    num = factorial(n - 1) * lam ** B.num_blocks * prod(factorial(len(b) - 1) for b in B.blocks)
    return num / (factorial(n * j - 1) * rising_factorial(lam / j, n))


def balanced_count_as_displayed(m: IntegerPartition, j: int) -> Fraction:
    """``(n!)^j / prod (i!)^{j m_ij} (m_ij!)^{j-1}``."""
    n = m.n // j
    den = prod(factorial(k // j) ** (j * m[k]) * factorial(m[k]) ** (j - 1)
               for k in range(j, m.n + 1, j))
    return Fraction(factorial(n) ** j, den)


# -- helpers ---------------------------------------------------------------------------------------

def _inputs(n, j, params=None, **kw) -> dict:
    d = {"n": n, "j": j}
    if params is not None:
        d["params"] = params.describe()
    d.update({k: str(v) for k, v in kw.items()})
    return d


def _compare(claim, inputs, p: ExactDist, q: ExactDist, level: str,
             note: str = "") -> AuditRecord:
    tv = total_variation(p, q)
    rec = AuditRecord(claim, dict(inputs, level=level),
                      {"tv": tv, "mass_lhs": p.total(), "mass_rhs": q.total()},
                      "equal" if tv == 0 else "differs", note=note)
    rec.consistent = 0 <= tv <= 1 and p.total() == 1 and q.total() == 1
    return rec


def _compare_levels(claim, inputs, p: ExactDist, q: ExactDist, note="") -> list[AuditRecord]:
    """Compare at set-partition level and after mapping to block sizes."""
    set_rec = _compare(claim, inputs, p, q, "set", note)
    ip = pushforward(p, block_sizes_to_integer_partition)
    iq = pushforward(q, block_sizes_to_integer_partition)
    int_rec = _compare(claim, inputs, ip, iq, "integer", note)
    # total variation cannot grow under a common map
    ok = int_rec.values["tv"] <= set_rec.values["tv"]
    set_rec.consistent &= ok
    int_rec.consistent &= ok
    return [set_rec, int_rec]


def _grid(n_max: int, j_set: Sequence[int], max_size: int):
    for j in j_set:
        for n in range(1, n_max + 1):
            if n * j <= max_size:
                yield n, j


def _scale_up(params: ModelParams, j: int) -> ModelParams | None:
    """Parameters whose ``scaled(j)`` is ``params``, when they exist."""
    try:
        if params.kind == "negative_kappa":
            return ModelParams.negative_kappa(params.kappa * j, params.m)
        if params.kind == "ewens":
            return ModelParams.ewens(params.theta * j)
        return ModelParams.two_param(params.alpha * j, params.theta * j)
    except ValueError:
        return None


# -- audit entries ------------------------------------------------------------------------------------

def audit_balanced_conditioning(n, j, params, budget=None) -> list[AuditRecord]:
    """Balanced law against an (alpha, theta) partition of [nj] conditioned to be balanced."""
    g = GroupIndexing(n, j)
    lhs = ExactDist.from_pmf(enumerate_balanced(n, j, budget),
                             lambda B: balanced_partition_pmf(B, g, params))
    base = ExactDist.from_pmf(enumerate_partitions(n * j, budget),
                              lambda B: two_param_partition_pmf(B, params))
    try:
        rhs = conditioned_distribution(base, lambda B: is_j_balanced(B, g))
    except ValueError:
        return [AuditRecord("balanced-conditioned", _inputs(n, j, params), {},
                            "undefined", note="balanced event has zero mass")]
    return _compare_levels("balanced-conditioned", _inputs(n, j, params), lhs, rhs)


def audit_balanced_integer_conditioning(n, j, params, budget=None) -> list[AuditRecord]:
    """Balanced block-size law against the block sizes of a conditioned (alpha, theta) partition."""
    g = GroupIndexing(n, j)
    support = enumerate_integer_partitions(n, j)
    masses = {m: balanced_integer_pmf(m, j, params).exact for m in support}
    mass = sum(masses.values(), Fraction(0))
    base = ExactDist.from_pmf(enumerate_partitions(n * j, budget),
                              lambda B: two_param_partition_pmf(B, params))
    try:
        cond = conditioned_distribution(base, lambda B: is_j_balanced(B, g))
    except ValueError:
        return [AuditRecord("balanced-integer-conditioned", _inputs(n, j, params), {},
                            "undefined", note="balanced event has zero mass")]
    rhs = pushforward(cond, block_sizes_to_integer_partition)
    tv = total_variation(masses, rhs)
    rec = AuditRecord("balanced-integer-conditioned", _inputs(n, j, params, level="integer"),
                      {"tv": tv, "mass_lhs": mass, "mass_rhs": rhs.total()},
                      "equal" if tv == 0 and mass == 1 else "differs",
                      note="" if mass == 1 else "left side does not sum to one")
    rec.consistent = rhs.total() == 1
    return [rec]


def audit_even_conditioning(n, j, params, budget=None) -> list[AuditRecord]:
    """Even law at (alpha, theta) against an (alpha/j, theta/j) partition conditioned to be j-even."""
    g = GroupIndexing(n, j)
    lhs = ExactDist.from_pmf(enumerate_even(n, j, budget),
                             lambda B: even_partition_pmf(B, g, params))
    base = ExactDist.from_pmf(enumerate_partitions(n * j, budget),
                              lambda B: two_param_partition_pmf(B, params.scaled(j)))
    try:
        rhs = conditioned_distribution(base, lambda B: is_j_even(B, j))
    except ValueError:
        return [AuditRecord("even-conditioned", _inputs(n, j, params), {},
                            "undefined", note="even event has zero mass")]
    return _compare_levels("even-conditioned", _inputs(n, j, params), lhs, rhs)


def audit_integer_coincidence(n, j, params) -> list[AuditRecord]:
    """Do the balanced and even block-size laws coincide, and does each sum to one?"""
    support = enumerate_integer_partitions(n, j)
    bal = {m: balanced_integer_pmf(m, j, params).exact for m in support}
    even = {m: even_integer_pmf(m, j, params).exact for m in support}
    diff = sum((abs(bal[m] - even[m]) for m in support), Fraction(0))
    mb = sum(bal.values(), Fraction(0))
    me = sum(even.values(), Fraction(0))
    rec = AuditRecord("integer-laws-coincide", _inputs(n, j, params),
                      {"l1_gap": diff, "mass_balanced": mb, "mass_even": me},
                      "equal" if diff == 0 else "differs")
    # the two formulas differ only through (m!)^{j-1} versus m!, so they agree when j <= 2
    rec.consistent = me == 1 and (j > 2 or diff == 0)
    return [rec]


def audit_balanced_count(n, j, budget=None) -> list[AuditRecord]:
    """Displayed count of balanced partitions per block-size profile against enumeration."""
    counts: dict[IntegerPartition, int] = {}
    for B in enumerate_balanced(n, j, budget):
        m = block_sizes_to_integer_partition(B)
        counts[m] = counts.get(m, 0) + 1
    out = []
    for m in enumerate_integer_partitions(n, j):
        shown = balanced_count_as_displayed(m, j)
        actual = counts.get(m, 0)
        rec = AuditRecord("balanced-count-formula", _inputs(n, j, sizes=m.to_text()),
                          {"displayed": shown, "enumerated": actual},
                          "equal" if shown == actual else "differs")
        out.append(rec)
    return out


def audit_permutation_exponent(n, alpha, budget=None) -> list[AuditRecord]:
    """Power against rising-factorial numerator for the Ewens law on permutations."""
    perms = enumerate_permutations(n, budget)
    power = sum((ewens_permutation_pmf(s, alpha).exact for s in perms), Fraction(0))
    rising = sum((permutation_rising_reading(s, alpha) for s in perms), Fraction(0))
    rec = AuditRecord("permutation-exponent-reading", {"n": n, "alpha": str(alpha)},
                      {"mass_power": power, "mass_rising": rising},
                      "power reading normalises" if power == 1 else "power reading fails",
                      note="" if rising == 1 else "rising reading does not sum to one")
    rec.consistent = power == 1 and (n > 1 or rising == 1)
    return [rec]


def audit_even_j_exponent(n, j, params, budget=None) -> list[AuditRecord]:
    """Mass of the even law under several readings of its leading power of j."""
    support = enumerate_even(n, j, budget)
    readings = {
        "blocks_minus_one": lambda K, n_: K - 1,
        "none": lambda K, n_: 0,
        "groups_minus_one": lambda K, n_: n_ - 1,
    }
    values = {f"mass_{name}": sum((even_pmf_with_j_power(B, j, params, f) for B in support), Fraction(0))
              for name, f in readings.items()}
    ok = values["mass_blocks_minus_one"] == 1
    rec = AuditRecord("even-j-exponent-reading", _inputs(n, j, params), values,
                      "blocks-minus-one normalises" if ok else "blocks-minus-one fails")
    rec.consistent = ok
    return [rec]


def audit_even_limit_display(n, j, lam, budget=None) -> list[AuditRecord]:
    """Normalisation of the displayed kappa -> 0 even law and of the corrected one."""
    g = GroupIndexing(n, j)
    support = enumerate_even(n, j, budget)
    shown = sum((even_limit_as_displayed(B, j, lam) for B in support), Fraction(0))
    fixed = sum((even_partition_limit_pmf(B, g, lam).exact for B in support), Fraction(0))
    # limit check: the corrected law against the even law near kappa = 0
    kappa = Fraction(lam) / 10**6
    near = ModelParams.negative_kappa(kappa, 10**6)
    near_dist = {B: even_partition_pmf(B, g, near).exact for B in support}
    fixed_dist = {B: even_partition_limit_pmf(B, g, lam).exact for B in support}
    tv = total_variation(near_dist, fixed_dist)
    rec = AuditRecord("even-limit-display", _inputs(n, j, lam=lam),
                      {"mass_displayed": shown, "correction_factor": 1 / shown,
                       "mass_corrected": fixed, "tv_to_kappa_1e-6": float(tv)},
                      "normalised" if shown == 1 else "not normalised")
    rec.consistent = fixed == 1 and shown == j and tv < Fraction(1, 1000)
    return [rec]


def audit_balanced_limit_display(n, j, lam, budget=None) -> list[AuditRecord]:
    g = GroupIndexing(n, j)
    support = enumerate_balanced(n, j, budget)
    mass = sum((balanced_partition_limit_pmf(B, g, lam).exact for B in support), Fraction(0))
    rec = AuditRecord("balanced-limit-display", _inputs(n, j, lam=lam), {"mass": mass},
                      "normalised" if mass == 1 else "not normalised")
    rec.consistent = mass == 1
    return [rec]


def audit_scaling_law(n, j, params, budget=None) -> list[AuditRecord]:
    """Closed forms at (alpha, theta) against two-step pushforwards at (alpha/j, theta/j)."""
    g = GroupIndexing(n, j)
    small = params.scaled(j)
    out = []
    bal = ExactDist.from_pmf(enumerate_balanced(n, j, budget),
                             lambda B: balanced_partition_pmf(B, g, params))
    out.append(_compare("scaling-law-balanced", _inputs(n, j, params), bal,
                        two_step_balanced_exact(n, j, small, budget), "set"))
    even = ExactDist.from_pmf(enumerate_even(n, j, budget),
                              lambda B: even_partition_pmf(B, g, params))
    out.append(_compare("scaling-law-even", _inputs(n, j, params), even,
                        two_step_even_exact(n, j, small, budget), "set"))
    for r in out:
        r.consistent &= r.verdict == "equal"
    return out


DEFAULT_LAMBDAS = (Fraction(1, 2), Fraction(1), Fraction(2))


def claims_audit(n_max: int = 4, j_set: Iterable[int] = (2, 3),
                 params_grid: Sequence[ModelParams] | None = None,
                 lams: Sequence = DEFAULT_LAMBDAS, max_size: int = 8,
                 budget: EnumerationBudget | None = None) -> AuditReport:
    """Run every audit entry over the ``(n, j)`` grid with ``nj <= max_size``."""
    from .verify import default_params

    params_grid = list(params_grid or default_params())
    j_set = list(j_set)
    report = AuditReport()
    grid = list(_grid(n_max, j_set, max_size))
    for n, j in grid:
        for p in params_grid:
            report.records += audit_balanced_conditioning(n, j, p, budget)
            report.records += audit_balanced_integer_conditioning(n, j, p, budget)
            report.records += audit_even_conditioning(n, j, p, budget)
            report.records += audit_integer_coincidence(n, j, p)
            report.records += audit_even_j_exponent(n, j, p, budget)
            report.records += audit_scaling_law(n, j, p, budget)
        report.records += audit_balanced_count(n, j, budget)
        for lam in lams:
            report.records += audit_even_limit_display(n, j, lam, budget)
            report.records += audit_balanced_limit_display(n, j, lam, budget)
    for n in range(1, min(n_max + 1, max_size, 6) + 1):
        for lam in lams:
            report.records += audit_permutation_exponent(n, lam, budget)
    return report
