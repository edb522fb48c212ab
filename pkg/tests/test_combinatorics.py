import pytest
from hypothesis import given, strategies as st

from jcrp.combinatorics import (
    GroupIndexing,
    IntegerPartition,
    Permutation,
    SetPartition,
    assemble_balanced,
    assemble_even,
    block_sizes_to_integer_partition,
    count_permutations_for,
    count_set_partitions_for,
    cycles_to_partition,
    delete_and_repair,
    delete_and_repair_tail,
    delete_element,
    is_j_balanced,
    is_j_even,
    neg_rising_block_factor,
    parse_integer_partition,
    parse_partition,
    parse_permutation,
    restrict_partition,
    rising_factorial,
)
from jcrp.errors import DomainError, RangeError
from jcrp.oracle import enumerate_partitions, enumerate_permutations
from fractions import Fraction


labels_strategy = st.integers(1, 8).flatmap(
    lambda n: st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
perm_strategy = st.integers(1, 8).flatmap(lambda n: st.permutations(list(range(1, n + 1))))


def test_from_blocks_canonicalises():
    B = SetPartition.from_blocks([[4, 2], [5, 1, 3]])
    assert B.blocks == ((1, 3, 5), (2, 4))
    assert B.to_text() == "1 3 5|2 4"


def test_constructor_rejects_non_canonical():
    with pytest.raises(DomainError):
        SetPartition(4, ((2, 4), (1, 3)))
    with pytest.raises(DomainError):
        SetPartition(3, ((1, 3),))


@given(labels_strategy)
def test_partition_text_round_trip(labels):
    B = SetPartition.from_labels(labels)
    assert parse_partition(B.to_text()) == B
    assert SetPartition.from_labels(B.labels()) == B


def test_parse_partition_rejects_non_canonical():
    with pytest.raises(DomainError):
        parse_partition("2 4|1 3")
    with pytest.raises(DomainError):
        parse_partition("1 x")


def test_permutation_cycles_and_inverse():
    s = Permutation.from_cycles(5, [(1, 3, 5), (2, 4)])
    assert s.image == (3, 4, 5, 2, 1)
    assert s.cycles() == [(1, 3, 5), (2, 4)]
    assert s.compose(s.inverse()) == Permutation.identity(5)
    assert parse_permutation("3 4 5 2 1") == s


@given(perm_strategy)
def test_cycle_partition_sizes_add_up(image):
    s = Permutation.from_image(image)
    B = cycles_to_partition(s)
    assert sum(B.block_sizes()) == s.n
    assert B.num_blocks == s.num_cycles


def test_integer_partition_text():
    m = IntegerPartition.from_parts([3, 1, 1])
    assert m.to_text() == "1^2 3^1"
    assert m.parts() == [3, 1, 1]
    assert m[1] == 2 and m[2] == 0 and m[9] == 0
    assert parse_integer_partition("1^2 3^1") == m
    with pytest.raises(DomainError):
        parse_integer_partition("3^1 1^2")


def test_restriction():
    B = parse_partition("1 3 5|2 4")
    assert restrict_partition(B, 3) == parse_partition("1 3|2")
    assert restrict_partition(B, 5) == B
    with pytest.raises(RangeError):
        restrict_partition(B, 6)


def test_delete_element_shifts_labels():
    B = parse_partition("1 3 5|2 4")
    assert delete_element(B, 3) == parse_partition("1 4|2 3")


def test_delete_and_repair_splices_cycle():
    s = Permutation.from_cycles(4, [(1, 4, 2), (3,)])
    assert delete_and_repair(s, 4) == Permutation.from_cycles(3, [(1, 2), (3,)])
    # a fixed point just disappears
    assert delete_and_repair(s, 3) == Permutation.from_cycles(3, [(1, 3, 2)])
    assert delete_and_repair_tail(s, 2) == Permutation.from_cycles(2, [(1, 2)])


@given(perm_strategy)
def test_delete_and_repair_keeps_cycle_count_or_drops_fixed_point(image):
    s = Permutation.from_image(image)
    if s.n < 2:
        return
    t = delete_and_repair(s, s.n)
    fixed = s(s.n) == s.n
    assert t.num_cycles == s.num_cycles - fixed


def test_counts_match_enumeration():
    from collections import Counter

    for n in range(1, 7):
        by_shape = Counter(block_sizes_to_integer_partition(B) for B in enumerate_partitions(n))
        for lam, c in by_shape.items():
            assert count_set_partitions_for(lam) == c
    perms = enumerate_permutations(5)
    by_blocks = Counter(cycles_to_partition(s) for s in perms)
    for B, c in by_blocks.items():
        assert count_permutations_for(B) == c


def test_rising_factorials():
    assert rising_factorial(Fraction(1, 2), 3) == Fraction(15, 8)
    assert rising_factorial(5, 0) == 1
    assert neg_rising_block_factor(Fraction(1, 2), 3) == Fraction(1, 2) * Fraction(1, 2) * Fraction(3, 2)


def test_group_indexing():
    g = GroupIndexing(3, 2)
    assert g.size == 6
    assert g.group(2) == (3, 4)
    assert [g.type_of(e) for e in range(1, 7)] == [1, 2, 1, 2, 1, 2]
    assert g.label(2, 1) == 3
    with pytest.raises(RangeError):
        g.group(4)


def test_even_and_balanced_predicates():
    g = GroupIndexing(2, 2)
    assert is_j_even(parse_partition("1 2|3 4"), 2)
    assert not is_j_even(parse_partition("1|2 3 4"), 2)
    assert is_j_balanced(parse_partition("1 4|2 3"), g)
    assert not is_j_balanced(parse_partition("1 3|2 4"), g)
    with pytest.raises(DomainError):
        is_j_even(parse_partition("1 2 3"), 2)


def test_balanced_with_custom_typing():
    # marks a, b on {1, 2} and {3, 4}
    typing = {1: "a", 2: "a", 3: "b", 4: "b"}
    g = GroupIndexing(2, 2)
    assert is_j_balanced(parse_partition("1 3|2 4"), g, typing)
    assert not is_j_balanced(parse_partition("1 2|3 4"), g, typing)


def test_assembly_produces_structured_partitions():
    g = GroupIndexing(3, 2)
    pi = parse_partition("1 3|2")
    for s in enumerate_permutations(3):
        B = assemble_balanced(pi, [s], g)
        assert is_j_balanced(B, g)
        assert sorted(B.block_sizes()) == [2, 4]
    for sigma in enumerate_permutations(6)[::37]:
        assert is_j_even(assemble_even(pi, sigma, g), 2)


def test_assemble_balanced_identity_matching():
    g = GroupIndexing(2, 2)
    pi = parse_partition("1|2")
    assert assemble_balanced(pi, [Permutation.identity(2)], g) == parse_partition("1 2|3 4")
    assert assemble_balanced(pi, [Permutation.from_image([2, 1])], g) == parse_partition("1 4|2 3")
