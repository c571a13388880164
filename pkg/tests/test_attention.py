import numpy as np
import pytest

from bisyn import autodiff as ad
from bisyn.attention import (HgatBlockParams, attention_weights, gat_layer,
                             hgat_block, init_gat_layer, init_hgat_block,
                             resolve_gat_layer, resolve_hgat_block,
                             stack_blocks)
from bisyn.autodiff import EmptyNeighborhoodError
from bisyn.gradcheck import grad_check
from bisyn.optim import ParamStore


def _layer(seed, d=8, heads=2, d_ff=None, prefix="g"):
    store = ParamStore()
    rng = np.random.default_rng(seed)
    init_gat_layer(store, prefix, d, heads, d_ff or 4 * d, rng)
    return store, resolve_gat_layer(store, prefix, heads)


def _random_mask(rng, n):
    mask = (rng.random((n, n)) < 0.4).astype(np.int8)
    mask = ((mask + mask.T) > 0).astype(np.int8)
    np.fill_diagonal(mask, 1)
    return mask


def test_single_node_attention_is_one():
    store, params = _layer(0, d=4, heads=2)
    h = ad.constant(np.random.default_rng(1).normal(size=(1, 4)).astype(np.float32))
    weights = attention_weights(h, np.array([[1]]), params)
    for alpha in weights:
        np.testing.assert_allclose(alpha, [[1.0]])
    out = gat_layer(h, np.array([[1]]), params)
    assert out.shape == (1, 4)


def test_identity_mask_isolates_nodes():
    store, params = _layer(2, d=8, heads=2)
    rng = np.random.default_rng(3)
    h = rng.normal(size=(5, 8)).astype(np.float32)
    eye = np.eye(5, dtype=np.int8)
    base = gat_layer(ad.constant(h), eye, params).data.copy()
    for j in range(1, 5):
        perturbed = h.copy()
        perturbed[j] += rng.normal(size=8)
        out = gat_layer(ad.constant(perturbed), eye, params).data
        np.testing.assert_array_equal(out[0], base[0])


def test_hand_computed_trace_two_nodes_one_head():
    # independent straight-numpy evaluation of the same layer arithmetic
    d, dh = 2, 2
    store = ParamStore()
    wg = np.array([[0.5, -0.3], [0.2, 0.7]], dtype=np.float32)
    att = np.array([0.3, -0.2, 0.6, 0.1], dtype=np.float32)
    w1 = np.array([[0.1, 0.4], [-0.2, 0.3]], dtype=np.float32)
    b1 = np.array([0.05, -0.05], dtype=np.float32)
    w2 = np.array([[1.0, 0.0], [0.5, -1.0]], dtype=np.float32)
    b2 = np.array([0.2, 0.1], dtype=np.float32)
    for name, arr in [("g.h0.wg", wg), ("g.h0.att", att), ("g.ff.w1", w1),
                      ("g.ff.b1", b1), ("g.ff.w2", w2), ("g.ff.b2", b2)]:
        store.add(name, arr)
    params = resolve_gat_layer(store, "g", heads=1)
    h = np.array([[1.0, 2.0], [-1.0, 0.5]], dtype=np.float32)
    adj = np.ones((2, 2), dtype=np.int8)

    proj = h @ wg
    src = proj @ att[:dh]
    dst = proj @ att[dh:]
    raw = src[:, None] + dst[None, :]
    scores = np.where(raw > 0, raw, 0.2 * raw)
    e = np.exp(scores - scores.max(axis=1, keepdims=True))
    alpha = e / e.sum(axis=1, keepdims=True)
    agg = alpha @ proj
    g = np.where(agg > 0, agg, np.expm1(agg))
    mixed = g + h
    pre = mixed @ w1 + b1
    inner = np.where(pre > 0, pre, np.expm1(pre))
    expected = inner @ w2 + b2

    got = gat_layer(ad.constant(h), adj, params).data
    np.testing.assert_allclose(got, expected, rtol=1e-5, atol=1e-6)


def test_attention_rows_sum_to_one_and_mask_is_sound():
    rng = np.random.default_rng(7)
    for trial in range(100):
        n = int(rng.integers(2, 17))
        heads = int(rng.integers(1, 5))
        d = 4 * heads
        store, params = _layer(trial, d=d, heads=heads)
        mask = _random_mask(rng, n)
        h = rng.normal(size=(n, d)).astype(np.float32)
        for alpha in attention_weights(ad.constant(h), mask, params):
            np.testing.assert_allclose(alpha.sum(axis=1), 1.0, atol=1e-6)
            assert (alpha[mask == 0] == 0).all()
        base = gat_layer(ad.constant(h), mask, params).data
        i = int(rng.integers(0, n))
        non_neighbors = np.flatnonzero(mask[i] == 0)
        if len(non_neighbors):
            j = int(non_neighbors[0])
            h2 = h.copy()
            h2[j] = 0.0
            out = gat_layer(ad.constant(h2), mask, params).data
            np.testing.assert_array_equal(out[i], base[i])


def test_gat_layer_empty_row_propagates():
    store, params = _layer(9, d=4, heads=1)
    adj = np.array([[1, 0], [0, 0]], dtype=np.int8)
    with pytest.raises(EmptyNeighborhoodError, match="node 1"):
        gat_layer(ad.constant(np.ones((2, 4), np.float32)), adj, params)


def test_output_shape_matches_input_for_any_heads():
    rng = np.random.default_rng(11)
    for heads in (1, 2, 4):
        d = 8
        store, params = _layer(heads, d=d, heads=heads)
        n = int(rng.integers(1, 9))
        h = rng.normal(size=(n, d)).astype(np.float32)
        mask = _random_mask(rng, n)
        assert gat_layer(ad.constant(h), mask, params).shape == (n, d)


@pytest.mark.parametrize("seed", range(5))
def test_gat_layer_grad_check_random_graphs(seed):
    rng = np.random.default_rng(seed + 100)
    n = int(rng.integers(3, 7))
    d, heads = 6, 2
    store = ParamStore()
    init_gat_layer(store, "g", d, heads, 2 * d, rng)
    h = rng.normal(size=(n, d)).astype(np.float32)
    mask = _random_mask(rng, n)

    def forward(s):
        params = resolve_gat_layer(s, "g", heads)
        out = gat_layer(ad.constant(h, dtype=s["g.ff.b2"].dtype), mask, params)
        return ad.sum_all(ad.mul(out, out))

    assert grad_check(forward, store) < 1e-4


def test_block_single_graph_equals_single_layer():
    store = ParamStore()
    rng = np.random.default_rng(13)
    init_hgat_block(store, "b", 8, 2, 16, 1, rng)
    block = resolve_hgat_block(store, "b", heads=2, n_layers=1)
    h = ad.constant(rng.normal(size=(4, 8)).astype(np.float32))
    mask = _random_mask(rng, 4)
    out_block = hgat_block(h, [mask], block).data
    out_layer = gat_layer(h, mask, block.layers[0]).data
    np.testing.assert_array_equal(out_block, out_layer)


def test_block_two_graphs_composes_layers():
    store = ParamStore()
    rng = np.random.default_rng(14)
    init_hgat_block(store, "b", 8, 2, 16, 2, rng)
    block = resolve_hgat_block(store, "b", heads=2, n_layers=2)
    h = ad.constant(rng.normal(size=(5, 8)).astype(np.float32))
    g1, g2 = _random_mask(rng, 5), _random_mask(rng, 5)
    out = hgat_block(h, [g1, g2], block).data
    manual = gat_layer(gat_layer(h, g1, block.layers[0]), g2, block.layers[1]).data
    np.testing.assert_array_equal(out, manual)


def test_block_length_mismatch():
    store = ParamStore()
    rng = np.random.default_rng(15)
    init_hgat_block(store, "b", 4, 1, 8, 2, rng)
    block = resolve_hgat_block(store, "b", heads=1, n_layers=2)
    with pytest.raises(ValueError, match="graphs for"):
        hgat_block(ad.constant(np.ones((2, 4), np.float32)),
                   [np.eye(2, dtype=np.int8)], block)


def test_hgat_block_grad_check():
    rng = np.random.default_rng(16)
    store = ParamStore()
    init_hgat_block(store, "b", 6, 2, 12, 3, rng)
    h = rng.normal(size=(4, 6)).astype(np.float32)
    graphs = [_random_mask(rng, 4) for _ in range(3)]

    def forward(s):
        block = resolve_hgat_block(s, "b", heads=2, n_layers=3)
        out = hgat_block(ad.constant(h, dtype=s["b.l0.ff.b2"].dtype), graphs, block)
        return ad.sum_all(ad.mul(out, out))

    assert grad_check(forward, store) < 1e-3


def test_stack_one_block_is_block():
    store = ParamStore()
    rng = np.random.default_rng(17)
    init_hgat_block(store, "b0", 8, 2, 16, 2, rng)
    block = resolve_hgat_block(store, "b0", heads=2, n_layers=2)
    h = ad.constant(rng.normal(size=(3, 8)).astype(np.float32))
    graphs = [_random_mask(rng, 3)] * 2
    np.testing.assert_array_equal(stack_blocks(h, graphs, [block]).data,
                                  hgat_block(h, graphs, block).data)


def test_stack_depth_changes_output():
    store = ParamStore()
    rng = np.random.default_rng(18)
    init_hgat_block(store, "b0", 8, 2, 16, 1, rng)
    init_hgat_block(store, "b1", 8, 2, 16, 1, rng)
    blocks = [resolve_hgat_block(store, f"b{i}", heads=2, n_layers=1)
              for i in range(2)]
    h = ad.constant(rng.normal(size=(4, 8)).astype(np.float32))
    graphs = [_random_mask(rng, 4)]
    one = stack_blocks(h, graphs, blocks[:1]).data
    two = stack_blocks(h, graphs, blocks).data
    assert not np.allclose(one, two)


def test_stack_block_count_bounds():
    store = ParamStore()
    rng = np.random.default_rng(19)
    init_hgat_block(store, "b", 4, 1, 8, 1, rng)
    block = resolve_hgat_block(store, "b", heads=1, n_layers=1)
    h = ad.constant(np.ones((2, 4), np.float32))
    graphs = [np.ones((2, 2), np.int8)]
    with pytest.raises(ValueError, match="block count"):
        stack_blocks(h, graphs, [])
    with pytest.raises(ValueError, match="block count"):
        stack_blocks(h, graphs, [block] * 4)
    assert stack_blocks(h, graphs, [block] * 3).shape == (2, 4)


def test_permutation_equivariance():
    rng = np.random.default_rng(20)
    store, params = _layer(21, d=6, heads=2, d_ff=12)
    n = 6
    h = rng.normal(size=(n, 6)).astype(np.float32)
    mask = _random_mask(rng, n)
    perm = rng.permutation(n)
    out = gat_layer(ad.constant(h), mask, params).data
    out_p = gat_layer(ad.constant(h[perm]), mask[np.ix_(perm, perm)], params).data
    np.testing.assert_allclose(out_p, out[perm], atol=1e-5)


def test_dropout_between_layers_only_in_training():
    store = ParamStore()
    rng = np.random.default_rng(22)
    init_hgat_block(store, "b", 4, 1, 8, 2, rng)
    block = resolve_hgat_block(store, "b", heads=1, n_layers=2)
    h = ad.constant(rng.normal(size=(3, 4)).astype(np.float32))
    graphs = [np.ones((3, 3), np.int8)] * 2
    eval_out = hgat_block(h, graphs, block, dropout_between=0.5,
                          dropout_io=0.5, training=False).data
    np.testing.assert_array_equal(
        eval_out, hgat_block(h, graphs, block).data)
    train_out = hgat_block(h, graphs, block, dropout_between=0.5,
                           dropout_io=0.5, rng=np.random.default_rng(1),
                           training=True).data
    assert not np.allclose(train_out, eval_out)
