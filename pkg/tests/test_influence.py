import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from currkit.gradstore import CheckpointGradients, CheckpointSet
from currkit.influence import (
    InfluenceError,
    InfluenceMatrix,
    aggregate,
    convolve,
    export_influence_text,
    influence_column,
    influence_matrix,
    load_influence,
    make_lognorm_filter,
    normalize_rows,
    pairwise_oracle,
    save_influence,
)

from conftest import random_checkpoint_set, random_gradients, two_cluster_gradients


def unit(rows, ckpt=1):
    return normalize_rows(CheckpointGradients(ckpt, np.asarray(rows, float), tuple(range(len(rows)))))


# --- normalization ---------------------------------------------------------

def test_normalize_345_triangle():
    out = unit([[3.0, 4.0]])
    assert np.allclose(out.rows, [[0.6, 0.8]], atol=1e-15)
    assert out.zero_rows == 0


def test_normalize_zero_row_kept_and_counted():
    out = unit([[0.0, 0.0], [1.0, 0.0]])
    assert np.array_equal(out.rows[0], [0.0, 0.0])
    assert out.zero_rows == 1


def test_normalize_scale_invariant():
    r = np.array([[1.5, -2.0, 0.25]])
    assert np.allclose(unit(r).rows, unit(2.0 * r).rows, atol=1e-15)


# --- fast path vs oracle ---------------------------------------------------

def test_worked_example_three_rows():
    g = unit([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    expected = np.array([2 / 3, 1 / 3, 2 / 3])
    assert np.allclose(influence_column(g, True), expected, atol=1e-15)
    assert np.allclose(pairwise_oracle(g, True), expected, atol=1e-15)


def test_single_document():
    g = unit([[2.0, 0.0]])
    assert np.allclose(influence_column(g, True), [1.0])
    with pytest.raises(InfluenceError, match="self-exclusion"):
        influence_column(g, False)
    with pytest.raises(InfluenceError, match="self-exclusion"):
        pairwise_oracle(g, False)


def test_identical_rows_score_one():
    g = unit([[1.0, 2.0]] * 5)
    assert np.allclose(influence_column(g, True), np.ones(5))


def test_orthogonal_pair():
    g = unit(np.eye(2))
    assert np.allclose(influence_column(g, True), [0.5, 0.5])
    assert np.allclose(influence_column(g, False), [0.0, 0.0])
    assert np.allclose(pairwise_oracle(g, False), [0.0, 0.0])


def test_zero_row_against_oracle_both_modes():
    g = unit([[0.0, 0.0], [1.0, 0.0], [0.5, 0.5]])
    for include_self in (True, False):
        fast = influence_column(g, include_self)
        slow = pairwise_oracle(g, include_self)
        assert np.max(np.abs(fast - slow)) < 1e-12


@given(
    n=st.integers(2, 60),
    d=st.integers(1, 16),
    seed=st.integers(0, 10_000),
    include_self=st.booleans(),
)
@settings(max_examples=30, deadline=None)
def test_fast_path_equals_oracle(n, d, seed, include_self):
    g = normalize_rows(random_gradients(n, d, seed))
    fast = influence_column(g, include_self)
    slow = pairwise_oracle(g, include_self)
    assert np.max(np.abs(fast - slow)) < 1e-10


@given(n=st.integers(2, 40), d=st.integers(1, 12), seed=st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_scale_invariance(n, d, seed):
    g = random_gradients(n, d, seed)
    rng = np.random.default_rng(seed + 1)
    scales = rng.uniform(0.01, 100.0, size=n)
    scaled = CheckpointGradients(1, g.rows * scales[:, None], g.doc_ids)
    a = influence_column(normalize_rows(g), True)
    b = influence_column(normalize_rows(scaled), True)
    assert np.max(np.abs(a - b)) < 1e-9


@given(n=st.integers(1, 50), d=st.integers(1, 10), seed=st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_scores_within_cosine_range(n, d, seed):
    g = normalize_rows(random_gradients(n, d, seed))
    col = influence_column(g, True)
    assert np.all(col >= -1.0 - 1e-12) and np.all(col <= 1.0 + 1e-12)


def test_chunk_size_agreement():
    g = normalize_rows(random_gradients(500, 8, seed=42))
    a = influence_column(g, True, chunk_rows=7)
    b = influence_column(g, True, chunk_rows=1024)
    assert np.max(np.abs(a - b)) < 1e-9


def test_majority_cluster_scores_higher():
    g, majority = two_cluster_gradients(seed=0)
    col = influence_column(normalize_rows(g), True)
    assert col[majority].mean() > col[~majority].mean()


# --- matrix assembly --------------------------------------------------------

def test_matrix_has_one_column_per_checkpoint():
    cset = random_checkpoint_set(6, 3, T=10, seed=1)
    phi = influence_matrix(cset)
    assert phi.values.shape == (6, 10)
    assert phi.checkpoint_indices == tuple(range(1, 11))
    # aggregate of T in-range columns stays within [-T, T]
    assert np.all(np.abs(aggregate(phi).values) <= 10 + 1e-9)


def test_matrix_t1_equals_single_column():
    cset = random_checkpoint_set(5, 4, T=1, seed=2)
    phi = influence_matrix(cset)
    col = influence_column(normalize_rows(cset.checkpoints[0]), True)
    assert np.array_equal(phi.values[:, 0], col)


def test_matrix_row_labels_follow_documents():
    cset = random_checkpoint_set(8, 4, T=2, seed=3)
    perm = np.random.default_rng(0).permutation(8)
    permuted = CheckpointSet(
        checkpoints=tuple(
            CheckpointGradients(ck.checkpoint_index, ck.rows[perm], tuple(int(perm[i]) for i in range(8)))
            for ck in cset.checkpoints
        ),
        eta=cset.eta,
    )
    phi = influence_matrix(cset)
    phi_p = influence_matrix(permuted)
    by_doc = {doc: phi.values[i] for i, doc in enumerate(phi.doc_ids)}
    by_doc_p = {doc: phi_p.values[i] for i, doc in enumerate(phi_p.doc_ids)}
    for doc in by_doc:
        assert np.max(np.abs(by_doc[doc] - by_doc_p[doc])) < 1e-12


def test_eta_scales_columns():
    cset = random_checkpoint_set(4, 3, T=2, seed=5)
    weighted = CheckpointSet(cset.checkpoints, (1.0, 0.5))
    a = influence_matrix(cset)
    b = influence_matrix(weighted)
    assert np.array_equal(a.values[:, 0], b.values[:, 0])
    assert np.allclose(a.values[:, 1] * 0.5, b.values[:, 1], atol=1e-15)


def test_aggregate():
    phi = InfluenceMatrix(np.array([[0.2, 0.3, -0.1]]), (0,), (1, 2, 3))
    assert abs(aggregate(phi).values[0] - 0.4) < 1e-12
    zero = InfluenceMatrix(np.zeros((3, 4)), (0, 1, 2), (1, 2, 3, 4))
    assert np.array_equal(aggregate(zero).values, np.zeros(3))
    col = np.array([[0.1], [0.7]])
    rep = InfluenceMatrix(np.repeat(col, 5, axis=1), (0, 1), tuple(range(5)))
    assert np.allclose(aggregate(rep).values, 5 * col[:, 0], atol=1e-15)


# --- lognormal filter and convolution ---------------------------------------

def lognorm_density(x, mu, sigma):
    return math.exp(-((math.log(x) - mu) ** 2) / (2 * sigma**2)) / (x * sigma * math.sqrt(2 * math.pi))


def test_filter_t1_is_identity_weight():
    assert np.array_equal(make_lognorm_filter(1).taps, [1.0])


def test_filter_t2_matches_direct_density():
    taps = make_lognorm_filter(2, mu=0.0, sigma=1.0).taps
    d1, d2 = lognorm_density(1, 0, 1), lognorm_density(2, 0, 1)
    assert abs(taps[0] - d1 / (d1 + d2)) < 1e-12
    assert abs(taps[1] - d2 / (d1 + d2)) < 1e-12
    assert abs(taps[0] - 0.7177) < 5e-4 and abs(taps[1] - 0.2823) < 5e-4


@given(
    T=st.integers(1, 20),
    mu=st.floats(-2, 2, allow_nan=False),
    sigma=st.floats(0.05, 4, allow_nan=False),
)
@settings(max_examples=50, deadline=None)
def test_filter_taps_nonnegative_sum_one(T, mu, sigma):
    taps = make_lognorm_filter(T, mu, sigma).taps
    assert np.all(taps >= 0)
    assert abs(taps.sum() - 1.0) < 1e-12


def test_filter_rejects_bad_sigma():
    with pytest.raises(InfluenceError):
        make_lognorm_filter(3, sigma=0.0)
    with pytest.raises(InfluenceError):
        make_lognorm_filter(0)


def convolve_oracle(values, taps):
    n, T = values.shape
    out = np.zeros_like(values)
    for i in range(n):
        for t in range(T):
            for k in range(len(taps)):
                if t - k >= 0:
                    out[i, t] += values[i, t - k] * taps[k]
    return out


def test_convolve_identity_filter_exact():
    phi = InfluenceMatrix(np.random.default_rng(2).normal(size=(7, 5)), tuple(range(7)), tuple(range(1, 6)))
    delta = make_lognorm_filter(1)
    delta.taps = np.array([1.0, 0.0, 0.0])  # explicit delta over 3 taps
    out = convolve(phi, delta)
    assert np.array_equal(out.values, phi.values)


@given(n=st.integers(1, 20), T=st.integers(1, 10), seed=st.integers(0, 9999))
@settings(max_examples=40, deadline=None)
def test_convolve_matches_double_loop(n, T, seed):
    rng = np.random.default_rng(seed)
    phi = InfluenceMatrix(rng.normal(size=(n, T)), tuple(range(n)), tuple(range(1, T + 1)))
    filt = make_lognorm_filter(int(rng.integers(1, T + 1)), mu=0.3, sigma=0.8)
    out = convolve(phi, filt)
    assert np.max(np.abs(out.values - convolve_oracle(phi.values, filt.taps))) < 1e-12


def test_convolve_constant_column_approaches_constant():
    c = 0.5
    phi = InfluenceMatrix(np.full((2, 6), c), (0, 1), tuple(range(1, 7)))
    filt = make_lognorm_filter(6)
    out = convolve(phi, filt)
    taps = filt.taps
    assert np.allclose(out.values[:, 0], c * taps[0], atol=1e-15)
    for t in range(6):
        assert np.allclose(out.values[:, t], c * taps[: t + 1].sum(), atol=1e-12)
    assert abs(out.values[0, 5] - c) < abs(out.values[0, 0] - c)


def test_convolve_rejects_long_filter():
    phi = InfluenceMatrix(np.zeros((2, 3)), (0, 1), (1, 2, 3))
    with pytest.raises(InfluenceError, match="filter length"):
        convolve(phi, make_lognorm_filter(4))


# --- I/O ---------------------------------------------------------------------

def test_influence_io_round_trip(tmp_path):
    cset = random_checkpoint_set(5, 3, T=4, seed=9)
    phi = influence_matrix(cset, include_self=False)
    p = tmp_path / "phi.imx"
    save_influence(phi, p)
    back = load_influence(p)
    assert np.array_equal(back.values, phi.values)
    assert back.doc_ids == phi.doc_ids
    assert back.checkpoint_indices == phi.checkpoint_indices
    assert back.include_self is False


def test_influence_text_export(tmp_path):
    phi = InfluenceMatrix(np.array([[0.25, 0.5]]), (3,), (1, 2))
    p = tmp_path / "phi.tsv"
    export_influence_text(phi, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "doc_id\tckpt_1\tckpt_2\taggregate"
    doc_id, a, b, agg = lines[1].split("\t")
    assert doc_id == "3" and float(a) == 0.25 and float(b) == 0.5 and float(agg) == 0.75
