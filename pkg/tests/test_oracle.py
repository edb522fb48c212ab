import json
from collections import Counter
from fractions import Fraction

import pytest

from jcrp.audit import claims_audit, even_limit_as_displayed, permutation_rising_reading
from jcrp.combinatorics import (
    GroupIndexing,
    SetPartition,
    delete_and_repair,
    parse_partition,
    restrict_partition,
)
from jcrp.distributions import (
    ExactDist,
    balanced_partition_pmf,
    even_partition_pmf,
    ewens_permutation_pmf,
    two_param_partition_pmf,
)
from jcrp.errors import DomainError, ResourceError
from jcrp.oracle import (
    EnumerationBudget,
    Family,
    bell_number,
    conditioned_distribution,
    consistency_check,
    empirical_vs_exact,
    enumerate_balanced,
    enumerate_even,
    enumerate_partitions,
    enumerate_permutations,
    exchangeability_check,
    seating_tree_exact,
    total_variation,
    two_step_balanced_exact,
    two_step_even_exact,
)
from jcrp.params import ModelParams

HALF = Fraction(1, 2)
P = ModelParams.two_param(HALF, 1)


def test_enumeration_counts():
    assert [len(enumerate_partitions(n)) for n in range(1, 8)] == [bell_number(n) for n in range(1, 8)]
    assert len(enumerate_partitions(3)) == 5
    assert len(enumerate_partitions(4)) == 15
    assert len(enumerate_even(1, 2)) == 1
    assert len(enumerate_even(2, 2)) == 4
    assert len(enumerate_balanced(1, 2)) == 1
    assert {B.to_text() for B in enumerate_balanced(2, 2)} == {"1 2 3 4", "1 2|3 4", "1 4|2 3"}


def test_enumeration_is_ordered_and_unique():
    parts = enumerate_partitions(5)
    assert len(set(parts)) == len(parts)
    labels = [B.labels() for B in parts]
    assert labels == sorted(labels)


def test_budget_stops_enumeration():
    with pytest.raises(ResourceError):
        enumerate_partitions(11)
    with pytest.raises(ResourceError):
        enumerate_partitions(6, EnumerationBudget(max_objects=100))
    with pytest.raises(ResourceError):
        seating_tree_exact(3, 2, P, "even", EnumerationBudget(max_objects=10))


def test_total_variation_examples():
    a, b = parse_partition("1 2"), parse_partition("1|2")
    p = {a: Fraction(1), b: Fraction(0)}
    q = {a: HALF, b: HALF}
    assert total_variation(p, p) == 0
    assert total_variation(p, q) == HALF
    assert total_variation({a: Fraction(1)}, {b: Fraction(1)}) == 1


def test_conditioning():
    d = ExactDist.from_pmf(enumerate_partitions(3), lambda B: two_param_partition_pmf(B, P))
    assert conditioned_distribution(d, lambda B: True) == d
    point = ExactDist({parse_partition("1 2"): Fraction(1)})
    assert conditioned_distribution(point, lambda B: B.num_blocks == 1) == point
    with pytest.raises(DomainError):
        conditioned_distribution(point, lambda B: False)


def test_seating_tree_small_cases():
    for rule in ("balanced", "even"):
        tree = seating_tree_exact(1, 2, P, rule)
        assert tree.prob(SetPartition.single_block(2)) == 1
    tree = seating_tree_exact(2, 2, P, "balanced")
    assert tree.prob(parse_partition("1 2 3 4")) == (2 - HALF) / 3
    assert tree.prob(parse_partition("1 4|2 3")) == (1 + HALF) / 6
    g = GroupIndexing(2, 2)
    even = seating_tree_exact(2, 2, P, "even")
    for B in enumerate_even(2, 2):
        assert even.prob(B) == even_partition_pmf(B, g, P).exact


@pytest.mark.parametrize("n,j", [(2, 2), (3, 2), (2, 3)])
def test_seating_tree_matches_closed_forms(n, j):
    g = GroupIndexing(n, j)
    p = ModelParams.two_param(Fraction(1, 3), Fraction(-1, 4))
    bal = ExactDist.from_pmf(enumerate_balanced(n, j), lambda B: balanced_partition_pmf(B, g, p))
    assert seating_tree_exact(n, j, p, "balanced") == bal
    even = ExactDist.from_pmf(enumerate_even(n, j), lambda B: even_partition_pmf(B, g, p))
    assert seating_tree_exact(n, j, p, "even") == even


def test_two_step_matches_closed_form_at_scaled_parameters():
    g = GroupIndexing(3, 2)
    p = ModelParams.negative_kappa(HALF, 3)
    bal = ExactDist.from_pmf(enumerate_balanced(3, 2), lambda B: balanced_partition_pmf(B, g, p))
    assert two_step_balanced_exact(3, 2, p.scaled(2)) == bal
    even = ExactDist.from_pmf(enumerate_even(3, 2), lambda B: even_partition_pmf(B, g, p))
    assert two_step_even_exact(3, 2, p.scaled(2)) == even


def test_two_step_even_class_reduction_matches_full_sum():
    # full sum over every permutation of [4] against the reduced computation
    from jcrp.combinatorics import assemble_even
    from jcrp.distributions import joint_even_pmf

    g = GroupIndexing(2, 2)
    full: dict = {}
    for pi in enumerate_partitions(2):
        for s in enumerate_permutations(4):
            B = assemble_even(pi, s, g)
            full[B] = full.get(B, Fraction(0)) + joint_even_pmf(pi, s, P).exact
    assert two_step_even_exact(2, 2, P) == ExactDist(full)


def test_consistency_check_detects_restriction_property():
    fam = Family("crp", enumerate_partitions, lambda B: two_param_partition_pmf(B, P).exact)
    rep = consistency_check(fam, lambda B: restrict_partition(B, B.n - 1), 3)
    assert rep.ok and rep.checked == 5
    perms = Family("power", enumerate_permutations, lambda s: ewens_permutation_pmf(s, HALF).exact)
    assert consistency_check(perms, lambda s: delete_and_repair(s, s.n), 3).ok


def test_consistency_check_flags_a_broken_family():
    rising = Family("rising", enumerate_permutations, lambda s: permutation_rising_reading(s, HALF))
    assert not consistency_check(rising, lambda s: delete_and_repair(s, s.n), 2).ok


def test_exchangeability_check():
    perms = enumerate_permutations(4)
    support = enumerate_partitions(4)
    good = exchangeability_check("crp", support, lambda B: two_param_partition_pmf(B, P).exact, perms)
    assert good.ok
    bad = exchangeability_check("tilted", support, lambda B: Fraction(B.blocks[0][-1]), perms)
    assert not bad.ok


def test_empirical_vs_exact():
    a, b = parse_partition("1 2"), parse_partition("1|2")
    exact = ExactDist({a: Fraction(1)})
    rep = empirical_vs_exact([a] * 20, exact)
    assert rep.tv == 0 and rep.outside_support == 0
    two = ExactDist({a: HALF, b: HALF})
    rep = empirical_vs_exact(Counter({a: 500, b: 500}), two)
    assert rep.tv == 0 and rep.chi2 == 0 and rep.dof == 1
    with pytest.raises(DomainError):
        empirical_vs_exact([a] * 5, two)
    assert empirical_vs_exact([b] * 20, exact).p_value == 0


def test_claims_audit_report():
    report = claims_audit(n_max=2, j_set=(2, 3))
    assert report.consistent
    assert {"balanced-conditioned", "balanced-integer-conditioned", "even-conditioned",
            "integer-laws-coincide", "permutation-exponent-reading", "even-j-exponent-reading",
            "even-limit-display", "scaling-law-balanced", "scaling-law-even"} <= report.claims()
    limit = [r for r in report.records if r.claim == "even-limit-display"
             and r.inputs["n"] == 2 and r.inputs["j"] == 2]
    assert limit and all(r.values["mass_displayed"] == 2 for r in limit)
    assert all(r.values["correction_factor"] == HALF for r in limit)
    assert all(r.verdict == "equal" for r in report.records if r.claim.startswith("scaling-law"))
    for line in report.to_jsonl().splitlines():
        rec = json.loads(line)
        assert {"claim", "inputs", "values", "verdict"} <= set(rec)


def test_displayed_limit_mass_is_j():
    for n, j in [(1, 2), (2, 2), (2, 3)]:
        total = sum((even_limit_as_displayed(B, j, 1) for B in enumerate_even(n, j)), Fraction(0))
        assert total == j
