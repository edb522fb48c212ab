"""Verification suites over the default parameter grid.

Every suite is a list of independent tasks (a module-level function plus
arguments), so the tasks can be handed to a process pool and the records
reassembled in submission order.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from .combinatorics import (
    GroupIndexing,
    delete_and_repair,
    delete_and_repair_tail,
    restrict_partition,
)
from .distributions import (
    ExactDist,
    balanced_integer_pmf,
    balanced_partition_limit_pmf,
    balanced_partition_pmf,
    even_integer_pmf,
    even_partition_limit_pmf,
    even_partition_pmf,
    ewens_integer_pmf,
    ewens_partition_pmf,
    ewens_permutation_pmf,
    gamma_identity_lhs,
    gamma_identity_rhs,
    joint_balanced_pmf,
    joint_even_pmf,
    two_param_partition_pmf,
)
from .oracle import (
    EnumerationBudget,
    Family,
    consistency_check,
    empirical_vs_exact,
    enumerate_balanced,
    enumerate_even,
    enumerate_integer_partitions,
    enumerate_partitions,
    enumerate_permutations,
    exchangeability_check,
    seating_tree_exact,
    total_variation,
    two_step_balanced_exact,
    two_step_even_exact,
    type_preserving_permutations,
)
from .params import ModelParams

SUITES = ("normalization", "consistency", "identity", "seating-tree", "sampler",
          "exchangeability", "limits", "scaling", "claims-audit")


def default_params() -> list[ModelParams]:
    return [ModelParams.two_param(Fraction(1, 2), 1), ModelParams.two_param(0, 1),
            ModelParams.negative_kappa(Fraction(1, 2), 3)]


def regime_params() -> list[ModelParams]:
    """Three points in each regime, one of them with negative theta."""
    return [ModelParams.two_param(Fraction(1, 2), 1), ModelParams.two_param(0, 1),
            ModelParams.two_param(Fraction(1, 3), Fraction(-1, 4)),
            ModelParams.negative_kappa(Fraction(1, 2), 3), ModelParams.negative_kappa(1, 2),
            ModelParams.negative_kappa(Fraction(1, 3), 5)]


LAMBDAS = (Fraction(1, 2), Fraction(1), Fraction(2))
SEATING_GRID = ((1, 2), (2, 2), (3, 2), (2, 3))


def grid(max_size: int, j_set=(2, 3)):
    return [(n, j) for j in j_set for n in range(1, max_size // j + 1)]


@dataclass
class CheckRecord:
    suite: str
    check: str
    inputs: dict
    values: dict
    passed: bool
    binding: bool = True

    def to_dict(self) -> dict:
        def show(v):
            if isinstance(v, Fraction):
                return f"{v.numerator}/{v.denominator}"
            return v
        return {"suite": self.suite, "check": self.check, "inputs": self.inputs,
                "values": {k: show(v) for k, v in self.values.items()},
                "passed": self.passed, "binding": self.binding}

    def to_text(self) -> str:
        status = "PASS" if self.passed else ("FAIL" if self.binding else "info")
        ins = " ".join(f"{k}={v}" for k, v in self.inputs.items())
        vals = " ".join(f"{k}={self.to_dict()['values'][k]}" for k in self.values)
        return f"[{status}] {self.suite}/{self.check} {ins} {vals}".rstrip()


@dataclass
class SuiteReport:
    records: list[CheckRecord] = field(default_factory=list)
    audit: Any = None

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records if r.binding)

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if r.binding and not r.passed]

    def to_text(self) -> str:
        lines = [r.to_text() for r in self.records]
        if self.audit is not None:
            lines.append(self.audit.summary())
        n_bind = sum(r.binding for r in self.records)
        lines.append(f"{n_bind - len(self.failures())}/{n_bind} binding checks passed")
        return "\n".join(lines)

    def to_jsonl(self) -> str:
        lines = [json.dumps(r.to_dict(), sort_keys=True) for r in self.records]
        if self.audit is not None and self.audit.records:
            lines.append(self.audit.to_jsonl())
        return "\n".join(lines)


def _mass(values) -> Fraction:
    return sum(values, Fraction(0))


def _ins(params=None, **kw) -> dict:
    d = {k: str(v) for k, v in kw.items()}
    if params is not None:
        d["params"] = params.describe()
    return d


# -- normalization ------------------------------------------------------------------------------------

def task_normalize_ewens(n: int, lam, budget=None) -> list[CheckRecord]:
    parts = enumerate_integer_partitions(n)
    m1 = _mass(ewens_integer_pmf(m, lam).exact for m in parts)
    m2 = _mass(ewens_partition_pmf(B, lam).exact for B in enumerate_partitions(n, budget))
    return [CheckRecord("normalization", "ewens-integer", _ins(n=n, lam=lam), {"mass": m1}, m1 == 1),
            CheckRecord("normalization", "ewens-partition", _ins(n=n, lam=lam), {"mass": m2}, m2 == 1)]


def task_normalize_two_param(n: int, params: ModelParams, budget=None) -> list[CheckRecord]:
    m = _mass(two_param_partition_pmf(B, params).exact for B in enumerate_partitions(n, budget))
    return [CheckRecord("normalization", "two-param-partition", _ins(params, n=n), {"mass": m}, m == 1)]


def task_normalize_grouped(n: int, j: int, params: ModelParams, budget=None) -> list[CheckRecord]:
    g = GroupIndexing(n, j)
    ins = _ins(params, n=n, j=j)
    parts = enumerate_integer_partitions(n, j)
    out = []
    for name, pmf in (("balanced-integer", balanced_integer_pmf), ("even-integer", even_integer_pmf)):
        m = _mass(pmf(p, j, params).exact for p in parts)
        out.append(CheckRecord("normalization", name, ins, {"mass": m}, m == 1))
    m = _mass(balanced_partition_pmf(B, g, params).exact for B in enumerate_balanced(n, j, budget))
    out.append(CheckRecord("normalization", "balanced-partition", ins, {"mass": m}, m == 1))
    m = _mass(even_partition_pmf(B, g, params).exact for B in enumerate_even(n, j, budget))
    out.append(CheckRecord("normalization", "even-partition", ins, {"mass": m}, m == 1))
    return out


def task_normalize_limits(n: int, j: int, lam, budget=None) -> list[CheckRecord]:
    g = GroupIndexing(n, j)
    ins = _ins(n=n, j=j, lam=lam)
    m1 = _mass(balanced_partition_limit_pmf(B, g, lam).exact for B in enumerate_balanced(n, j, budget))
    m2 = _mass(even_partition_limit_pmf(B, g, lam).exact for B in enumerate_even(n, j, budget))
    return [CheckRecord("normalization", "balanced-limit", ins, {"mass": m1}, m1 == 1),
            CheckRecord("normalization", "even-limit", ins, {"mass": m2}, m2 == 1)]


def normalization_tasks(max_size=8, budget=None):
    tasks = []
    for n in range(1, max_size + 1):
        for lam in LAMBDAS:
            tasks.append((task_normalize_ewens, (n, lam, budget)))
        for p in default_params():
            tasks.append((task_normalize_two_param, (n, p, budget)))
    for n, j in grid(max_size):
        for p in default_params():
            tasks.append((task_normalize_grouped, (n, j, p, budget)))
        for lam in LAMBDAS:
            tasks.append((task_normalize_limits, (n, j, lam, budget)))
    return tasks


# -- consistency -------------------------------------------------------------------------------------------

def _consistency_record(check, rep, ins) -> CheckRecord:
    return CheckRecord("consistency", check, ins,
                       {"checked": rep.checked, "mismatches": len(rep.mismatches) + len(rep.stray)}, rep.ok)


def task_consistency_partitions(n: int, params: ModelParams, lam, budget=None) -> list[CheckRecord]:
    support = lambda k: enumerate_partitions(k, budget)
    proj = lambda B: restrict_partition(B, B.n - 1)
    f3 = Family("two-param", support, lambda B: two_param_partition_pmf(B, params).exact)
    f2 = Family("ewens", support, lambda B: ewens_partition_pmf(B, lam).exact)
    return [_consistency_record("two-param-restriction", consistency_check(f3, proj, n), _ins(params, n=n)),
            _consistency_record("ewens-restriction", consistency_check(f2, proj, n), _ins(n=n, lam=lam))]


def task_consistency_permutations(n: int, alpha, budget=None) -> list[CheckRecord]:
    fam = Family("power-permutation", lambda k: enumerate_permutations(k, budget),
                 lambda s: ewens_permutation_pmf(s, alpha).exact)
    rep = consistency_check(fam, lambda s: delete_and_repair(s, s.n), n)
    return [_consistency_record("permutation-delete-repair", rep, _ins(n=n, alpha=alpha))]


def task_consistency_joint(n: int, j: int, params: ModelParams, budget=None) -> list[CheckRecord]:
    perms = {k: enumerate_permutations(k, budget) for k in (n, n + 1)}
    parts = {k: enumerate_partitions(k, budget) for k in (n, n + 1)}

    def bal_support(k):
        return [(pi, ms) for pi in parts[k] for ms in itertools.product(perms[k], repeat=j - 1)]

    def bal_proj(x):
        pi, ms = x
        return restrict_partition(pi, pi.n - 1), tuple(delete_and_repair(s, s.n) for s in ms)

    bal = Family("joint-balanced", bal_support,
                 lambda x: joint_balanced_pmf(x[0], x[1], GroupIndexing(x[0].n, j), params).exact)
    big = {k: enumerate_permutations(k * j, budget) for k in (n, n + 1)}
    memo: dict = {}

    def even_pmf(x):
        # the value depends on sigma only through its size
        key = (x[0], x[1].n)
        if key not in memo:
            memo[key] = joint_even_pmf(x[0], x[1], params).exact
        return memo[key]

    even = Family("joint-even", lambda k: [(pi, s) for pi in parts[k] for s in big[k]], even_pmf)
    even_proj = lambda x: (restrict_partition(x[0], x[0].n - 1), delete_and_repair_tail(x[1], x[1].n - j))
    ins = _ins(params, n=n, j=j)
    return [_consistency_record("joint-balanced-product-map", consistency_check(bal, bal_proj, n), ins),
            _consistency_record("joint-even-product-map", consistency_check(even, even_proj, n), ins)]


def consistency_tasks(budget=None):
    tasks = []
    for n in range(1, 6):
        for p, lam in zip(default_params(), LAMBDAS):
            tasks.append((task_consistency_partitions, (n, p, lam, budget)))
    for n in range(1, 5):
        for lam in LAMBDAS:
            tasks.append((task_consistency_permutations, (n, lam, budget)))
    for n in range(1, 4):
        for p in default_params():
            tasks.append((task_consistency_joint, (n, 2, p, budget)))
    return tasks


# -- identity --------------------------------------------------------------------------------------------------

def task_identity(n: int, k: int, budget=None) -> list[CheckRecord]:
    out = []
    # nk + 1 points pin down a polynomial of degree nk
    for i in range(n * k + 1):
        a = Fraction(i + 1, 3)
        lhs, rhs = gamma_identity_lhs(n, k, a, budget), gamma_identity_rhs(n, k, a)
        out.append(CheckRecord("identity", "gamma-identity", _ins(n=n, k=k, alpha=a),
                               {"lhs": lhs, "rhs": rhs}, lhs == rhs))
    return out


def identity_tasks(max_size=8, budget=None):
    return [(task_identity, (n, k, budget)) for k in range(1, max_size + 1)
            for n in range(1, max_size // k + 1)]


# -- seating tree ----------------------------------------------------------------------------------------------

def task_seating_tree(n: int, j: int, params: ModelParams, budget=None) -> list[CheckRecord]:
    g = GroupIndexing(n, j)
    out = []
    for rule, support, pmf in (("balanced", enumerate_balanced(n, j, budget), balanced_partition_pmf),
                               ("even", enumerate_even(n, j, budget), even_partition_pmf)):
        tree = seating_tree_exact(n, j, params, rule, budget)
        closed = ExactDist.from_pmf(support, lambda B: pmf(B, g, params))
        tv = total_variation(tree, closed)
        out.append(CheckRecord("seating-tree", f"{rule}-tree-equals-closed-form",
                               _ins(params, n=n, j=j), {"tv": tv, "support": len(closed)}, tv == 0))
    return out


def seating_tree_tasks(budget=None):
    return [(task_seating_tree, (n, j, p, budget)) for n, j in SEATING_GRID for p in regime_params()]


# -- scaling ---------------------------------------------------------------------------------------------------

def task_scaling(n: int, j: int, params: ModelParams, budget=None) -> list[CheckRecord]:
    g = GroupIndexing(n, j)
    small = params.scaled(j)
    ins = _ins(params, n=n, j=j)
    bal = ExactDist.from_pmf(enumerate_balanced(n, j, budget), lambda B: balanced_partition_pmf(B, g, params))
    even = ExactDist.from_pmf(enumerate_even(n, j, budget), lambda B: even_partition_pmf(B, g, params))
    tb = total_variation(bal, two_step_balanced_exact(n, j, small, budget))
    te = total_variation(even, two_step_even_exact(n, j, small, budget))
    return [CheckRecord("scaling", "balanced-equals-two-step", ins, {"tv": tb}, tb == 0),
            CheckRecord("scaling", "even-equals-two-step", ins, {"tv": te}, te == 0)]


def scaling_tasks(max_size=8, budget=None):
    return [(task_scaling, (n, j, p, budget)) for n, j in grid(max_size) for p in default_params()]


# -- exchangeability ---------------------------------------------------------------------------------------------

def task_exchangeability(n: int, j: int, params: ModelParams, lam, budget=None) -> list[CheckRecord]:
    g = GroupIndexing(n, j)
    ins = _ins(params, n=n, j=j, lam=lam)
    sym = enumerate_permutations(n * j, budget)
    typed = type_preserving_permutations(g, budget)
    cases = [
        ("balanced-partition", enumerate_balanced(n, j, budget),
         lambda B: balanced_partition_pmf(B, g, params).exact, typed),
        ("balanced-limit", enumerate_balanced(n, j, budget),
         lambda B: balanced_partition_limit_pmf(B, g, lam).exact, typed),
        ("even-partition", enumerate_even(n, j, budget),
         lambda B: even_partition_pmf(B, g, params).exact, sym),
        ("even-limit", enumerate_even(n, j, budget),
         lambda B: even_partition_limit_pmf(B, g, lam).exact, sym),
    ]
    out = []
    for name, support, pmf, group in cases:
        rep = exchangeability_check(name, support, pmf, group)
        out.append(CheckRecord("exchangeability", name, ins,
                               {"checked": rep.checked, "violations": len(rep.violations)}, rep.ok))
    return out


def task_exchangeability_flat(n: int, params: ModelParams, lam, budget=None) -> list[CheckRecord]:
    ins = _ins(params, n=n, lam=lam)
    sym = enumerate_permutations(n, budget)
    support = enumerate_partitions(n, budget)
    out = []
    for name, pmf in (("two-param-partition", lambda B: two_param_partition_pmf(B, params).exact),
                      ("ewens-partition", lambda B: ewens_partition_pmf(B, lam).exact)):
        rep = exchangeability_check(name, support, pmf, sym)
        out.append(CheckRecord("exchangeability", name, ins,
                               {"checked": rep.checked, "violations": len(rep.violations)}, rep.ok))
    return out


def exchangeability_tasks(max_size=6, budget=None):
    tasks = []
    for n in range(1, max_size + 1):
        for p, lam in zip(default_params(), LAMBDAS):
            tasks.append((task_exchangeability_flat, (n, p, lam, budget)))
    for n, j in grid(max_size):
        for p, lam in zip(default_params(), LAMBDAS):
            tasks.append((task_exchangeability, (n, j, p, lam, budget)))
    return tasks


# -- limits ------------------------------------------------------------------------------------------------------

LIMIT_TOL = Fraction(1, 1000)


def _near_limit(lam) -> ModelParams:
    return ModelParams.negative_kappa(Fraction(lam) / 10**4, 10**4)


def task_limit_flat(n: int, lam, budget=None) -> list[CheckRecord]:
    near = _near_limit(lam)
    support = enumerate_partitions(n, budget)
    p = {B: two_param_partition_pmf(B, near).exact for B in support}
    q = {B: ewens_partition_pmf(B, lam).exact for B in support}
    tv = total_variation(p, q)
    return [CheckRecord("limits", "two-param-to-ewens", _ins(n=n, lam=lam), {"tv": float(tv)}, tv < LIMIT_TOL)]


def task_limit_grouped(n: int, j: int, lam, budget=None) -> list[CheckRecord]:
    near = _near_limit(lam)
    g = GroupIndexing(n, j)
    ins = _ins(n=n, j=j, lam=lam)
    bal = enumerate_balanced(n, j, budget)
    tv_b = total_variation({B: balanced_partition_pmf(B, g, near).exact for B in bal},
                           {B: balanced_partition_limit_pmf(B, g, lam).exact for B in bal})
    even = enumerate_even(n, j, budget)
    tv_e = total_variation({B: even_partition_pmf(B, g, near).exact for B in even},
                           {B: even_partition_limit_pmf(B, g, lam).exact for B in even})
    return [CheckRecord("limits", "balanced-to-limit", ins, {"tv": float(tv_b)}, tv_b < LIMIT_TOL),
            CheckRecord("limits", "even-to-corrected-limit", ins, {"tv": float(tv_e)}, tv_e < LIMIT_TOL)]


def limit_tasks(max_size=6, budget=None):
    tasks = [(task_limit_flat, (n, lam, budget)) for n in range(1, max_size + 1) for lam in LAMBDAS]
    tasks += [(task_limit_grouped, (n, j, lam, budget)) for n, j in grid(max_size) for lam in LAMBDAS]
    return tasks


# -- samplers ----------------------------------------------------------------------------------------------------

SAMPLER_DRAWS = 10**6
SAMPLER_TV = 0.01
SAMPLER_P = 1e-3


def sampler_target(model: str, n: int, j: int, params: ModelParams, budget=None) -> ExactDist:
    """Exact law the named sampler should reproduce."""
    g = GroupIndexing(n, j)
    if model == "crp":
        return ExactDist.from_pmf(enumerate_partitions(n, budget), lambda B: two_param_partition_pmf(B, params))
    if model == "balanced":
        return ExactDist.from_pmf(enumerate_balanced(n, j, budget), lambda B: balanced_partition_pmf(B, g, params))
    if model == "even":
        return ExactDist.from_pmf(enumerate_even(n, j, budget), lambda B: even_partition_pmf(B, g, params))
    if model == "two-step-balanced":
        return two_step_balanced_exact(n, j, params, budget)
    if model == "two-step-even":
        return two_step_even_exact(n, j, params, budget)
    raise ValueError(f"unknown model {model!r}")


def task_sampler(model: str, n: int, j: int, params: ModelParams, seed: int,
                 draws: int = SAMPLER_DRAWS, budget=None) -> list[CheckRecord]:
    from .samplers import RngHandle, partition_counts, sample_labels

    exact = sampler_target(model, n, j, params, budget)
    labels = sample_labels(model, n, j, params, RngHandle(seed), draws)
    rep = empirical_vs_exact(partition_counts(labels), exact)
    ok = rep.tv < SAMPLER_TV and rep.p_value > SAMPLER_P
    return [CheckRecord("sampler", model, _ins(params, n=n, j=j, draws=draws, seed=seed),
                        {"tv": round(rep.tv, 6), "chi2": round(rep.chi2, 3), "dof": rep.dof,
                         "p": round(rep.p_value, 6)}, ok)]


def sampler_tasks(max_size=6, draws=SAMPLER_DRAWS, seed=20240101, budget=None):
    points = [ModelParams.two_param(Fraction(1, 2), 1), ModelParams.negative_kappa(Fraction(1, 2), 3)]
    tasks = []
    k = 0
    for p in points:
        for n in range(1, max_size + 1):
            tasks.append((task_sampler, ("crp", n, 1, p, seed + k, draws, budget)))
            k += 1
        for n, j in grid(max_size):
            for model in ("balanced", "even", "two-step-balanced", "two-step-even"):
                tasks.append((task_sampler, (model, n, j, p, seed + k, draws, budget)))
                k += 1
    return tasks


# -- runner ---------------------------------------------------------------------------------------------------------

def suite_tasks(suite: str, budget: EnumerationBudget | None = None,
                draws: int = SAMPLER_DRAWS, seed: int = 20240101) -> list[tuple[Callable, tuple]]:
    if suite == "normalization":
        return normalization_tasks(budget=budget)
    if suite == "consistency":
        return consistency_tasks(budget)
    if suite == "identity":
        return identity_tasks(budget=budget)
    if suite == "seating-tree":
        return seating_tree_tasks(budget)
    if suite == "sampler":
        return sampler_tasks(draws=draws, seed=seed, budget=budget)
    if suite == "exchangeability":
        return exchangeability_tasks(budget=budget)
    if suite == "limits":
        return limit_tasks(budget=budget)
    if suite == "scaling":
        return scaling_tasks(budget=budget)
    raise ValueError(f"unknown suite {suite!r}")


def _call(task):
    f, args = task
    return f(*args)


def run_suite(suite: str, workers: int = 1, budget: EnumerationBudget | None = None,
              draws: int = SAMPLER_DRAWS, seed: int = 20240101) -> SuiteReport:
    """Run one suite, or ``"all"``; records come back in task order whatever ``workers`` is."""
    if suite == "all":
        report = SuiteReport()
        for name in SUITES:
            sub = run_suite(name, workers, budget, draws, seed)
            report.records += sub.records
            report.audit = sub.audit or report.audit
        return report
    if suite == "claims-audit":
        from .audit import claims_audit
        return SuiteReport(audit=claims_audit(budget=budget))
    tasks = suite_tasks(suite, budget, draws, seed)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_call, tasks))
    else:
        chunks = [_call(t) for t in tasks]
    return SuiteReport([r for chunk in chunks for r in chunk])
