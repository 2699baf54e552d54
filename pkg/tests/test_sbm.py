import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlrsc.errors import CapacityError, ValidationError
from mlrsc.sbm import (
    BlockModel,
    Membership,
    model_preset,
    population_pi,
    preset_blocks,
    sample_msbm,
    sample_mscbm,
)


def _edge_set(net):
    return [set(zip(*layer.csr.nonzero())) for layer in net.layers]


def test_membership_theta_has_one_per_row():
    m = Membership.from_sizes([2, 3])
    theta = m.theta()
    np.testing.assert_array_equal(theta.sum(axis=1), np.ones(5))
    np.testing.assert_array_equal(theta.argmax(axis=1), m.labels)


def test_membership_rejects_out_of_range():
    with pytest.raises(ValidationError):
        Membership(np.array([0, 3]), 3)


def test_rho_zero_gives_empty_layers():
    model = model_preset(1, 50, 4, 0.0)
    assert sample_msbm(model, 1).nnz == 0
    assert sample_mscbm(model_preset(4, 50, 4, 0.0), 1).nnz == 0


def test_all_ones_gives_complete_graph():
    row = Membership.from_sizes([4, 3])
    model = BlockModel(row, [np.ones((2, 2))] * 2, rho=1.0)
    net = sample_msbm(model, 0)
    expected = np.ones((7, 7)) - np.eye(7)
    for layer in net.layers:
        np.testing.assert_array_equal(layer.csr.toarray(), expected)


def test_scbm_single_block_is_complete_digraph():
    m = Membership.from_sizes([6])
    model = BlockModel(m, [np.ones((1, 1))], rho=1.0, col=m)
    net = sample_mscbm(model, 0)
    assert net.directed
    assert net.layers[0].nnz == 6 * 5


def test_probability_outside_unit_interval_rejected():
    row = Membership.from_sizes([2, 2])
    with pytest.raises(ValidationError):
        BlockModel(row, [np.full((2, 2), 0.6)], rho=2.0)
    with pytest.raises(ValidationError):
        BlockModel(row, [np.array([[0.1, 0.2], [0.3, 0.1]])], rho=1.0)  # asymmetric


def test_msbm_rejects_directed_model():
    with pytest.raises(ValidationError):
        sample_msbm(model_preset(4, 20, 2, 0.1), 0)
    with pytest.raises(ValidationError):
        sample_mscbm(model_preset(1, 20, 2, 0.1), 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**63 - 1), model_id=st.sampled_from([1, 2, 3]))
def test_msbm_symmetric_zero_diagonal(seed, model_id):
    net = sample_msbm(model_preset(model_id, 40, 2, 0.5), seed)
    for layer in net.layers:
        dense = layer.csr.toarray()
        np.testing.assert_array_equal(dense, dense.T)
        assert not dense.diagonal().any()


def test_determinism():
    model = model_preset(1, 120, 4, 0.2)
    assert _edge_set(sample_msbm(model, 9)) == _edge_set(sample_msbm(model, 9))
    assert _edge_set(sample_msbm(model, 9)) != _edge_set(sample_msbm(model, 10))
    dmodel = model_preset(4, 120, 4, 0.2)
    assert _edge_set(sample_mscbm(dmodel, 9)) == _edge_set(sample_mscbm(dmodel, 9))


def test_scbm_not_symmetrized_and_no_diagonal():
    net = sample_mscbm(model_preset(4, 100, 2, 0.5), 3)
    dense = net.layers[0].csr.toarray()
    assert not dense.diagonal().any()
    assert (dense != dense.T).any()


@pytest.mark.slow
def test_model1_within_block_frequency():
    n, L, rho = 1000, 20, 0.1
    model = model_preset(1, n, L, rho)
    net = sample_msbm(model, 2024)
    members = np.flatnonzero(model.row.labels == 2)
    s = members.size
    pairs = s * (s - 1) / 2
    counts = [net.layers[l].csr[members][:, members].nnz / 2 for l in range(L // 2)]
    freq = np.sum(counts) / (pairs * (L // 2))
    assert abs(freq - 0.085) <= 0.01


@pytest.mark.slow
def test_model4_row3_col1_frequency():
    n, L, rho = 1000, 20, 0.1
    model = model_preset(4, n, L, rho)
    net = sample_mscbm(model, 2024)
    rows = np.flatnonzero(model.row.labels == 2)
    cols = np.flatnonzero(model.col.labels == 0)
    overlap = np.intersect1d(rows, cols).size  # diagonal cells are never edges
    cells = rows.size * cols.size - overlap
    counts = [net.layers[l].csr[rows][:, cols].nnz for l in range(L // 2)]
    freq = np.sum(counts) / (cells * (L // 2))
    assert abs(freq - rho * 0.85) <= 0.01


@pytest.mark.slow
def test_edge_frequency_moment_check():
    R = 2000
    row = Membership.from_sizes([3, 3])
    B = np.array([[0.7, 0.2], [0.2, 0.4]])
    net = sample_msbm(BlockModel(row, [B] * R, rho=1.0), 77)
    stack = np.array([layer.csr.toarray() for layer in net.layers])
    freq = stack.mean(axis=0)
    for i, j in [(0, 1), (0, 4), (3, 5)]:
        p = B[row.labels[i], row.labels[j]]
        assert abs(freq[i, j] - p) <= 3 * np.sqrt(p * (1 - p) / R)


def test_preset_model1_entry():
    b1, _ = preset_blocks(1)
    assert b1[0, 0] == pytest.approx(0.625, abs=1e-14)
    assert b1[2, 2] == pytest.approx(0.85, abs=1e-14)


def test_preset_matches_rounded_displays():
    displays = {
        1: ([[0.62, 0.22, 0.46], [0.22, 0.62, 0.46], [0.46, 0.46, 0.85]], None),
        2: ([[0.66, 0.22, 0.44], [0.22, 0.46, 0.58], [0.44, 0.58, 0.78]],
            [[0.09, 0.53, 0.62], [0.53, 0.29, 0.48], [0.62, 0.48, 0.72]]),
        3: (None, [[0.45, 0.25, 0.21], [0.25, 0.45, 0.21], [0.21, 0.21, 0.7]]),
        4: ([[0.46, 0.625, 0.225], [0.46, 0.225, 0.625], [0.85, 0.46, 0.46]],
            [[0.46, 0.225, 0.625], [0.46, 0.625, 0.225], [0.85, 0.46, 0.46]]),
    }
    for model_id, shown in displays.items():
        for exact, approx in zip(preset_blocks(model_id), shown):
            if approx is not None:
                np.testing.assert_allclose(exact, approx, atol=0.011)


def test_model2_rank_deficient():
    b1, b2 = preset_blocks(2)
    model = model_preset(2, 30, 6, 0.1)
    total = sum(b @ b for b in model.blocks)
    assert np.linalg.matrix_rank(total, tol=1e-10) == 2
    assert np.linalg.matrix_rank(b1 @ b1 + b2 @ b2, tol=1e-10) == 2


def test_model1_full_rank():
    model = model_preset(1, 30, 4, 0.1)
    assert np.linalg.matrix_rank(sum(b @ b for b in model.blocks), tol=1e-10) == 3


def test_preset_community_sizes():
    np.testing.assert_array_equal(model_preset(1, 10, 2, 0.1).row.sizes(), [3, 4, 3])
    m4 = model_preset(4, 1000, 2, 0.1)
    np.testing.assert_array_equal(m4.row.sizes(), [300, 400, 300])
    np.testing.assert_array_equal(m4.col.sizes(), [400, 300, 300])


def test_preset_layer_assignment():
    b1, b2 = preset_blocks(1)
    model = model_preset(1, 10, 4, 0.1)
    np.testing.assert_allclose(model.blocks[0], b1)
    np.testing.assert_allclose(model.blocks[3], b2)
    odd = model_preset(1, 10, 5, 0.1, allow_odd_layers=True)
    assert sum(np.allclose(b, b1) for b in odd.blocks) == 2


@pytest.mark.parametrize("args", [(1, 10, 3, 0.1), (5, 10, 2, 0.1), (0, 10, 2, 0.1)])
def test_preset_invalid(args):
    with pytest.raises(ValidationError):
        model_preset(*args)


def test_pi_single_block():
    # Theta B Theta' = b J and J^2 = n J, so Pi = b^2 J
    b, n = 0.3, 7
    model = BlockModel(Membership.from_sizes([n]), [np.array([[b]])], rho=1.0)
    np.testing.assert_allclose(population_pi(model), np.full((n, n), b * b), atol=1e-15)


def test_pi_matches_direct_formula():
    model = model_preset(3, 20, 4, 0.3)
    theta = model.row.theta()
    direct = np.zeros((20, 20))
    for l in range(model.L):
        P = theta @ model.probabilities(l) @ theta.T
        direct += P @ P / 20
    np.testing.assert_allclose(population_pi(model), direct / model.L, atol=1e-14)


def test_pi_rho_zero():
    assert not population_pi(model_preset(1, 20, 2, 0.0)).any()


def test_pi_rank_and_psd():
    pi = population_pi(model_preset(1, 100, 20, 0.1))
    vals = np.linalg.eigvalsh(pi)[::-1]
    assert vals[2] > 0
    assert np.all(np.abs(vals[3:]) <= 1e-10 * vals[0])
    assert vals.min() >= -1e-10 * vals[0]


def test_pi_guard():
    with pytest.raises(CapacityError):
        population_pi(model_preset(1, 5002, 2, 0.1))
    with pytest.raises(ValidationError):
        population_pi(model_preset(4, 20, 2, 0.1))
