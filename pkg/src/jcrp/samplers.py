"""Sequential samplers for the plain, balanced and even restaurant processes.

Every sampler draws from an explicit :class:`RngHandle`; there is no global
random state.  The ``*_batch`` functions simulate many independent draws at
once with numpy (one row per draw).  The single-draw functions call them
with ``size=1``, so both paths share one implementation.

Batch results are label arrays: entry ``[r, e]`` is the least element
(0-based) of the block holding element ``e + 1`` in draw ``r``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .combinatorics import GroupIndexing, Permutation, SetPartition, is_j_balanced, is_j_even
from .errors import DomainError, ParameterError
from .params import ModelParams

_SEED_MASK = (1 << 64) - 1

MODELS = ("crp", "balanced", "even", "two-step-balanced", "two-step-even")


@dataclass(frozen=True)
class RngHandle:
    """Seed plus stream number for a counter-based (Philox) generator.

    Distinct ``stream`` values give independent sequences for the same
    ``seed``; the same pair always reproduces the same draws.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _SEED_MASK:
            raise ParameterError(f"seed {self.seed} is not a 64-bit unsigned integer")
        if self.stream < 0:
            raise ParameterError(f"stream must be non-negative, got {self.stream}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(ss))

    def spawn(self, k: int) -> RngHandle:
        return RngHandle(self.seed, self.stream + k)


@dataclass(frozen=True)
class SeatingStep:
    displaced: tuple[int, ...]
    table: int


@dataclass(frozen=True)
class SeatingTrace:
    """Choices made at each arrival after the first group.

    ``displaced`` lists, for ``i = 2..j``, the unit (1-based label) that the
    ``i``-th newcomer swapped places with.  ``table`` is the 0-based index of
    the chosen table in order of opening; it equals the current table count
    when a new table is opened.
    """

    rule: str
    n: int
    j: int
    steps: tuple[SeatingStep, ...]

    def to_records(self) -> list[dict]:
        return [{"step": s, "displaced": list(st.displaced), "table": st.table}
                for s, st in enumerate(self.steps, start=1)]


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RngHandle):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise ParameterError(f"expected an RngHandle or numpy Generator, got {type(rng).__name__}")


def _check_args(n: int, j: int, params):
    if not isinstance(params, ModelParams):
        raise ParameterError(f"expected ModelParams, got {type(params).__name__}")
    if n < 1 or j < 1:
        raise DomainError(f"need n, j >= 1, got n={n}, j={j}")


def _choose_tables(gen, counts, num_tables, params):
    """One table per row from the (alpha, theta) seating weights.

    ``counts[r, t]`` is the size of table ``t`` in row ``r``; the returned
    column equals ``num_tables[r]`` when a new table is opened.
    """
    size, cap = counts.shape
    rows = np.arange(size)
    alpha = float(params.alpha)
    existing = np.arange(cap)[None, :] < num_tables[:, None]
    w = np.where(existing, counts - alpha, 0.0)
    if params.kind == "negative_kappa":
        # exact zero once m tables are open
        new_w = float(params.kappa) * (params.m - num_tables)
    else:
        new_w = float(params.theta) + alpha * num_tables
    w[rows, num_tables] = np.maximum(new_w, 0.0)
    cum = np.cumsum(w, axis=1)
    u = gen.random(size) * cum[rows, num_tables]
    choice = (cum <= u[:, None]).sum(axis=1)
    return np.minimum(choice, num_tables)


def _restaurant_batch(n: int, j: int, params: ModelParams, gen, size: int, rule: str):
    """Shared loop for the plain (``j = 1``), balanced and even seating rules.

    Returns ``(table_of_unit, displaced, tables)``: tables per unit
    ``(size, n*j)``, 0-based displaced units ``(size, n-1, j-1)`` and table
    choices ``(size, n-1)``.
    """
    N = n * j
    rows = np.arange(size)
    pos = np.full((size, N), -2, dtype=np.int64)
    pos[:, :j] = 0
    counts = np.zeros((size, n + 1), dtype=np.int64)
    counts[:, 0] = j
    num_tables = np.ones(size, dtype=np.int64)
    displaced = np.zeros((size, n - 1, j - 1), dtype=np.int64)
    tables = np.zeros((size, n - 1), dtype=np.int64)
    for s in range(1, n):
        pos[:, s * j:(s + 1) * j] = -1  # -1 marks the arriving group
        for i in range(2, j + 1):
            me = s * j + i - 1
            if rule == "balanced":
                target = gen.integers(0, s + 1, size=size) * j + (i - 1)
            else:
                target = gen.integers(0, s * j + i - 1, size=size)
            held = pos[rows, target].copy()
            pos[rows, target] = pos[rows, me]
            pos[rows, me] = held
            displaced[:, s - 1, i - 2] = target
        choice = _choose_tables(gen, counts, num_tables, params)
        tables[:, s - 1] = choice
        seated = pos[:, :(s + 1) * j]
        pos[:, :(s + 1) * j] = np.where(seated == -1, choice[:, None], seated)
        counts[rows, choice] += j
        num_tables += choice == num_tables
    return pos, displaced, tables


def _canonical_labels(block_ids: np.ndarray) -> np.ndarray:
    """Replace arbitrary block ids by the least (0-based) element of each block."""
    size, N = block_ids.shape
    rows = np.arange(size)
    first = np.full((size, int(block_ids.max()) + 1), N, dtype=np.int64)
    for e in range(N - 1, -1, -1):
        first[rows, block_ids[:, e]] = e
    return first[rows[:, None], block_ids]


def _validate(labels: np.ndarray, j: int, rule: str):
    size, N = labels.shape
    rows = np.repeat(np.arange(size), N)
    if rule == "even":
        counts = np.zeros((size, N), dtype=np.int64)
        np.add.at(counts, (rows, labels.ravel()), 1)
        if np.any(counts % j):
            raise RuntimeError("even sampler produced a partition that is not j-even")
    elif rule == "balanced":
        types = np.tile(np.arange(N) % j, size)
        counts = np.zeros((size, N, j), dtype=np.int64)
        np.add.at(counts, (rows, labels.ravel(), types), 1)
        if np.any(counts != counts[:, :, :1]):
            raise RuntimeError("balanced sampler produced a partition that is not j-balanced")


def to_partition(row) -> SetPartition:
    return SetPartition.from_labels([int(x) for x in row])


def partition_counts(labels: np.ndarray) -> Counter:
    """Tally a label array into ``{SetPartition: count}``."""
    labels = np.ascontiguousarray(labels, dtype=np.int16)
    keys = labels.view(np.dtype((np.void, labels.dtype.itemsize * labels.shape[1]))).ravel()
    _, first, counts = np.unique(keys, return_index=True, return_counts=True)
    return Counter({to_partition(labels[i]): int(c) for i, c in zip(first, counts)})


# -- batch samplers --------------------------------------------------------------------

def crp_batch(n: int, params: ModelParams, rng, size: int) -> np.ndarray:
    _check_args(n, 1, params)
    pos, _, _ = _restaurant_batch(n, 1, params, _generator(rng), size, "crp")
    return _canonical_labels(pos)


def balanced_crp_batch(n: int, j: int, params: ModelParams, rng, size: int,
                       validate: bool = False, with_trace: bool = False):
    _check_args(n, j, params)
    pos, disp, tab = _restaurant_batch(n, j, params, _generator(rng), size, "balanced")
    labels = _canonical_labels(pos)
    if validate:
        _validate(labels, j, "balanced")
    return (labels, disp, tab) if with_trace else labels


def even_crp_batch(n: int, j: int, params: ModelParams, rng, size: int,
                   validate: bool = False, with_trace: bool = False):
    _check_args(n, j, params)
    pos, disp, tab = _restaurant_batch(n, j, params, _generator(rng), size, "even")
    labels = _canonical_labels(pos)
    if validate:
        _validate(labels, j, "even")
    return (labels, disp, tab) if with_trace else labels


def two_step_balanced_batch(n: int, j: int, params: ModelParams, rng, size: int,
                            validate: bool = False):
    """Group-level partition, ``j - 1`` uniform matchings and their assembly.

    Returns ``(pi_labels (size, n), matchings (size, j-1, n), labels (size, nj))``
    with matchings as 0-based images.
    """
    _check_args(n, j, params)
    gen = _generator(rng)
    pi, _, _ = _restaurant_batch(n, 1, params, gen, size, "crp")
    pi = _canonical_labels(pi)
    base = np.broadcast_to(np.arange(n), (size, j - 1, n))
    matchings = gen.permuted(base, axis=2)
    rows = np.arange(size)[:, None]
    block = np.empty((size, n * j), dtype=np.int64)
    block[rows, np.arange(n) * j] = pi
    for t in range(1, j):
        block[rows, matchings[:, t - 1, :] * j + t] = pi
    labels = _canonical_labels(block)
    if validate:
        _validate(labels, j, "balanced")
    return pi, matchings, labels


def two_step_even_batch(n: int, j: int, params: ModelParams, rng, size: int,
                        validate: bool = False):
    """Group-level partition, a uniform permutation of ``[nj]`` and their assembly.

    Returns ``(pi_labels (size, n), sigma (size, nj) 0-based images, labels (size, nj))``.
    """
    _check_args(n, j, params)
    gen = _generator(rng)
    pi, _, _ = _restaurant_batch(n, 1, params, gen, size, "crp")
    pi = _canonical_labels(pi)
    sigma = gen.permuted(np.broadcast_to(np.arange(n * j), (size, n * j)), axis=1)
    rows = np.arange(size)[:, None]
    block = np.empty((size, n * j), dtype=np.int64)
    block[rows, sigma] = pi[:, np.arange(n * j) // j]
    labels = _canonical_labels(block)
    if validate:
        _validate(labels, j, "even")
    return pi, sigma, labels


# -- single draws --------------------------------------------------------------------------

def _trace(rule, n, j, disp, tab) -> SeatingTrace:
    steps = tuple(SeatingStep(tuple(int(x) + 1 for x in disp[s]), int(tab[s]))
                  for s in range(n - 1))
    return SeatingTrace(rule, n, j, steps)


def crp_sample(n: int, params: ModelParams, rng) -> SetPartition:
    return to_partition(crp_batch(n, params, rng, 1)[0])


def balanced_crp_sample(n: int, j: int, params: ModelParams, rng) -> tuple[SetPartition, SeatingTrace]:
    labels, disp, tab = balanced_crp_batch(n, j, params, rng, 1, with_trace=True)
    B = to_partition(labels[0])
    assert is_j_balanced(B, GroupIndexing(n, j))
    return B, _trace("balanced", n, j, disp[0], tab[0])


def even_crp_sample(n: int, j: int, params: ModelParams, rng) -> tuple[SetPartition, SeatingTrace]:
    labels, disp, tab = even_crp_batch(n, j, params, rng, 1, with_trace=True)
    B = to_partition(labels[0])
    assert is_j_even(B, j)
    return B, _trace("even", n, j, disp[0], tab[0])


def two_step_balanced_sample(n: int, j: int, params: ModelParams, rng):
    """Returns ``(pi, matchings, assembled)``."""
    pi, ms, labels = two_step_balanced_batch(n, j, params, rng, 1)
    matchings = [Permutation(n, tuple(int(x) + 1 for x in m)) for m in ms[0]]
    return to_partition(pi[0]), matchings, to_partition(labels[0])


def two_step_even_sample(n: int, j: int, params: ModelParams, rng):
    """Returns ``(pi, sigma, assembled)``."""
    pi, sigma, labels = two_step_even_batch(n, j, params, rng, 1)
    sig = Permutation(n * j, tuple(int(x) + 1 for x in sigma[0]))
    return to_partition(pi[0]), sig, to_partition(labels[0])


def replay_trace(trace: SeatingTrace) -> SetPartition:
    """Rebuild the partition a seating trace describes, one choice at a time."""
    n, j = trace.n, trace.j
    if len(trace.steps) != n - 1:
        raise DomainError(f"trace has {len(trace.steps)} steps, expected {n - 1}")
    pos = [0] * j
    num_tables = 1
    for s, step in enumerate(trace.steps, start=1):
        pos += [-1] * j
        for i, target in zip(range(2, j + 1), step.displaced):
            me = s * j + i - 1
            pos[me], pos[target - 1] = pos[target - 1], pos[me]
        if not 0 <= step.table <= num_tables:
            raise DomainError(f"table {step.table} not available at step {s}")
        pos = [step.table if t == -1 else t for t in pos]
        num_tables += step.table == num_tables
    return SetPartition.from_labels(pos)


def sample_labels(model: str, n: int, j: int, params: ModelParams, rng, size: int,
                  validate: bool = False) -> np.ndarray:
    """Label array of ``size`` draws from one of :data:`MODELS`."""
    if model == "crp":
        return crp_batch(n, params, rng, size)
    if model == "balanced":
        return balanced_crp_batch(n, j, params, rng, size, validate)
    if model == "even":
        return even_crp_batch(n, j, params, rng, size, validate)
    if model == "two-step-balanced":
        return two_step_balanced_batch(n, j, params, rng, size, validate)[2]
    if model == "two-step-even":
        return two_step_even_batch(n, j, params, rng, size, validate)[2]
    raise DomainError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
