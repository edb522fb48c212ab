from fractions import Fraction

import numpy as np
import pytest

from jcrp.combinatorics import GroupIndexing, SetPartition, is_j_balanced, is_j_even
from jcrp.distributions import ExactDist, balanced_partition_pmf, even_partition_pmf, two_param_partition_pmf
from jcrp.errors import DomainError, ParameterError
from jcrp.oracle import empirical_vs_exact, enumerate_balanced, enumerate_even, enumerate_partitions
from jcrp.params import ModelParams
from jcrp.samplers import (
    MODELS,
    RngHandle,
    balanced_crp_batch,
    balanced_crp_sample,
    crp_sample,
    even_crp_sample,
    partition_counts,
    replay_trace,
    sample_labels,
    to_partition,
    two_step_balanced_sample,
    two_step_even_sample,
)

HALF = Fraction(1, 2)
P = ModelParams.two_param(HALF, 1)
NEG = ModelParams.negative_kappa(HALF, 3)


def test_same_handle_same_draws():
    for model in MODELS:
        a = sample_labels(model, 3, 2, P, RngHandle(11), 50)
        b = sample_labels(model, 3, 2, P, RngHandle(11), 50)
        assert np.array_equal(a, b)


def test_streams_differ():
    a = sample_labels("even", 4, 2, P, RngHandle(11, 0), 200)
    b = sample_labels("even", 4, 2, P, RngHandle(11, 1), 200)
    assert not np.array_equal(a, b)
    assert RngHandle(3).spawn(2) == RngHandle(3, 2)


def test_bad_handles_and_args():
    with pytest.raises(ParameterError):
        RngHandle(-1)
    with pytest.raises(DomainError):
        sample_labels("nope", 2, 2, P, RngHandle(0), 1)


@pytest.mark.parametrize("params", [P, NEG, ModelParams.two_param(0, 1)])
def test_draws_are_structured(params):
    g = GroupIndexing(4, 3)
    for row in sample_labels("balanced", 4, 3, params, RngHandle(5), 300, validate=True):
        assert is_j_balanced(to_partition(row), g)
    for row in sample_labels("even", 4, 3, params, RngHandle(6), 300, validate=True):
        assert is_j_even(to_partition(row), 3)
    for model in ("two-step-balanced", "two-step-even"):
        labels = sample_labels(model, 3, 3, params.scaled(3), RngHandle(7), 100, validate=True)
        assert labels.shape == (100, 9)


def test_negative_kappa_respects_table_cap():
    p = ModelParams.negative_kappa(HALF, 2)
    labels = sample_labels("crp", 8, 1, p, RngHandle(1), 2000)
    assert max(to_partition(r).num_blocks for r in labels) <= 2


def test_single_draw_helpers():
    rng = RngHandle(2024)
    assert crp_sample(1, P, rng) == SetPartition.single_block(1)
    B, trace = balanced_crp_sample(4, 2, P, rng)
    assert replay_trace(trace) == B
    assert len(trace.steps) == 3
    B, trace = even_crp_sample(4, 3, NEG, rng)
    assert replay_trace(trace) == B
    assert trace.to_records()[0]["step"] == 1
    pi, ms, B = two_step_balanced_sample(3, 2, P.scaled(2), rng)
    assert pi.n == 3 and len(ms) == 1 and is_j_balanced(B, GroupIndexing(3, 2))
    pi, sigma, B = two_step_even_sample(3, 2, P.scaled(2), rng)
    assert sigma.n == 6 and is_j_even(B, 2)


def test_traces_replay_for_many_seeds():
    for seed in range(40):
        for sampler in (balanced_crp_sample, even_crp_sample):
            B, trace = sampler(4, 2, NEG, RngHandle(seed))
            assert replay_trace(trace) == B


def test_batch_trace_arrays():
    labels, disp, tab = balanced_crp_batch(3, 2, P, RngHandle(0), 10, with_trace=True)
    assert labels.shape == (10, 6)
    assert disp.shape[0] == 10 and tab.shape == (10, 2)


def test_partition_counts():
    labels = np.array([[0, 0, 2], [0, 0, 2], [0, 1, 1]])
    counts = partition_counts(labels)
    assert counts[SetPartition.from_blocks([[1, 2], [3]])] == 2
    assert counts[SetPartition.from_blocks([[1], [2, 3]])] == 1


def _check(labels, exact):
    rep = empirical_vs_exact(partition_counts(labels), exact)
    assert rep.outside_support == 0
    assert rep.tv < 0.01
    assert rep.p_value > 1e-3


def test_crp_sampler_quick():
    exact = ExactDist.from_pmf(enumerate_partitions(3), lambda B: two_param_partition_pmf(B, P))
    _check(sample_labels("crp", 3, 1, P, RngHandle(1), 200_000), exact)


@pytest.mark.parametrize("params", [P, NEG])
def test_grouped_samplers_quick(params):
    g = GroupIndexing(2, 2)
    bal = ExactDist.from_pmf(enumerate_balanced(2, 2), lambda B: balanced_partition_pmf(B, g, params))
    even = ExactDist.from_pmf(enumerate_even(2, 2), lambda B: even_partition_pmf(B, g, params))
    _check(sample_labels("balanced", 2, 2, params, RngHandle(2), 200_000), bal)
    _check(sample_labels("even", 2, 2, params, RngHandle(3), 200_000), even)
    # the two-step constructions at (alpha/j, theta/j) reproduce the same laws
    _check(sample_labels("two-step-balanced", 2, 2, params.scaled(2), RngHandle(4), 200_000), bal)
    _check(sample_labels("two-step-even", 2, 2, params.scaled(2), RngHandle(5), 200_000), even)
