import numpy as np
import pytest

from adarec import arrayio
from adarec.gnn import (GnnParams, PoolingMode, PoolingSpec, bpr_gradients,
                        bpr_step, pool, pooled_by_action, propagate, score)
from adarec.graph import Graph, InteractionSet, Kind, NodeId


def _graph_from_pairs(pairs, n_users, n_items, max_hops=4):
    return Graph(InteractionSet(pairs, n_users, n_items), max_hops=max_hops)


def _random_graph(rng, n_users=None, n_items=None):
    n_users = n_users or int(rng.integers(4, 12))
    n_items = n_items or int(rng.integers(4, 12))
    n_pairs = int(rng.integers(n_users, n_users * 3))
    pairs = {(int(rng.integers(n_users)), int(rng.integers(n_items)))
             for _ in range(n_pairs)}
    return _graph_from_pairs(pairs, n_users, n_items)


def _dense_layers(graph, layer0, n_max):
    adj = graph.adjacency.toarray()
    deg = adj.sum(axis=1)
    inv = np.zeros_like(deg)
    inv[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    norm = inv[:, None] * adj * inv[None, :]
    layers = [layer0.copy()]
    for _ in range(n_max):
        layers.append(norm @ layers[-1])
    return layers


class TestPropagate:
    def test_single_edge_swaps_basis_vectors(self):
        g = _graph_from_pairs([(0, 0)], 1, 1, max_hops=1)
        params = GnnParams(2, dim=2, n_max=1, seed=0)
        params.layer0 = np.array([[1.0, 0.0], [0.0, 1.0]])
        table = propagate(g, params)
        assert np.allclose(table.layers[1][0], [0.0, 1.0])
        assert np.allclose(table.layers[1][1], [1.0, 0.0])

    def test_path_degree_two_normalization(self):
        # u0 - i0 - u1: the item vector is (e_u0 + e_u1) / sqrt(2)
        g = _graph_from_pairs([(0, 0), (1, 0)], 2, 1, max_hops=1)
        params = GnnParams(3, dim=2, n_max=1, seed=1)
        table = propagate(g, params)
        item = g.gid(NodeId(Kind.ITEM, 0))
        expected = (params.layer0[0] + params.layer0[1]) / np.sqrt(2)
        assert np.abs(table.layers[1][item] - expected).max() < 1e-15

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(2)
        g = _random_graph(rng, 15, 15)
        params = GnnParams(g.n_nodes, dim=4, n_max=4, seed=3)
        table = propagate(g, params)
        oracle = _dense_layers(g, params.layer0, 4)
        for n in range(5):
            assert np.abs(table.layers[n] - oracle[n]).max() <= 1e-10

    def test_isolated_nodes_zero_beyond_layer0(self):
        g = _graph_from_pairs([(0, 0)], 2, 1, max_hops=3)
        params = GnnParams(3, dim=3, n_max=3, seed=4)
        table = propagate(g, params)
        isolated = g.gid(NodeId(Kind.USER, 1))
        for n in range(1, 4):
            assert np.all(table.layers[n][isolated] == 0.0)

    def test_linearity(self):
        rng = np.random.default_rng(5)
        g = _random_graph(rng)
        params = GnnParams(g.n_nodes, dim=3, n_max=4, seed=6)
        base = propagate(g, params)
        params.layer0 = 2.5 * params.layer0
        scaled = propagate(g, params)
        for n in range(5):
            assert np.abs(scaled.layers[n] - 2.5 * base.layers[n]).max() < 1e-12

    def test_repropagation_bit_identical(self):
        rng = np.random.default_rng(7)
        g = _random_graph(rng)
        params = GnnParams(g.n_nodes, dim=5, n_max=4, seed=8)
        a = propagate(g, params)
        b = propagate(g, params)
        for la, lb in zip(a.layers, b.layers):
            assert np.array_equal(la, lb)


class TestPool:
    def test_one_hot_weights_select_layer(self):
        g = _graph_from_pairs([(0, 0), (0, 1), (1, 1)], 2, 2)
        params = GnnParams(g.n_nodes, dim=3, n_max=4, seed=9)
        table = propagate(g, params)
        weights = np.zeros(5)
        weights[3] = 1.0
        spec = PoolingSpec(PoolingMode.SUM, weights)
        out = pool(table, NodeId(Kind.USER, 0), 3, spec)
        assert np.array_equal(out, table.layers[3][0])

    def test_uniform_weights_average_used_layers(self):
        g = _graph_from_pairs([(0, 0)], 1, 1)
        params = GnnParams(2, dim=2, n_max=4, seed=10)
        table = propagate(g, params)
        spec = PoolingSpec.uniform(4)
        out = pool(table, NodeId(Kind.ITEM, 0), 2, spec)
        gid = 1
        expected = (table.layers[0][gid] + table.layers[1][gid] + table.layers[2][gid]) / 3
        assert np.abs(out - expected).max() < 1e-15

    def test_concat_full_depth_has_no_padding(self):
        g = _graph_from_pairs([(0, 0)], 1, 1)
        params = GnnParams(2, dim=2, n_max=4, seed=11)
        table = propagate(g, params)
        spec = PoolingSpec.uniform(4, PoolingMode.CONCAT)
        out = pool(table, NodeId(Kind.USER, 0), 4, spec)
        assert out.shape == (10,)
        parts = [table.layers[n][0] for n in range(5)]
        assert np.array_equal(out, np.concatenate(parts))

    def test_concat_pads_beyond_action(self):
        g = _graph_from_pairs([(0, 0)], 1, 1)
        params = GnnParams(2, dim=2, n_max=4, seed=12)
        table = propagate(g, params)
        spec = PoolingSpec.uniform(4, PoolingMode.CONCAT)
        out = pool(table, NodeId(Kind.USER, 0), 2, spec)
        assert out.shape == (10,)
        assert np.all(out[6:] == 0.0)
        assert np.any(out[:6] != 0.0)

    def test_concat_dimension_constant_across_actions(self):
        g = _graph_from_pairs([(0, 0), (0, 1)], 1, 2)
        params = GnnParams(3, dim=3, n_max=4, seed=13)
        table = propagate(g, params)
        spec = PoolingSpec.uniform(4, PoolingMode.CONCAT)
        dims = {pool(table, NodeId(Kind.ITEM, 1), a, spec).shape for a in range(1, 5)}
        assert dims == {(15,)}

    def test_action_bounds(self):
        g = _graph_from_pairs([(0, 0)], 1, 1)
        params = GnnParams(2, dim=2, n_max=4, seed=14)
        table = propagate(g, params)
        spec = PoolingSpec.uniform(4)
        with pytest.raises(ValueError):
            pool(table, NodeId(Kind.USER, 0), 0, spec)
        with pytest.raises(ValueError):
            pool(table, NodeId(Kind.USER, 0), 5, spec)

    def test_pooled_by_action_matches_pool_bitwise(self):
        rng = np.random.default_rng(15)
        g = _random_graph(rng)
        params = GnnParams(g.n_nodes, dim=4, n_max=4, seed=16)
        table = propagate(g, params)
        for mode in (PoolingMode.SUM, PoolingMode.CONCAT):
            spec = PoolingSpec.uniform(4, mode)
            pooled = pooled_by_action(table, spec)
            for gid in range(g.n_nodes):
                node = g.node_of(gid)
                for a in range(1, 5):
                    assert np.array_equal(pooled[a - 1, gid], pool(table, node, a, spec))


class TestScore:
    def test_arithmetic(self):
        assert score(np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0

    def test_orthogonal(self):
        assert score(np.array([1.0, 0.0]), np.array([0.0, 5.0])) == 0.0

    def test_symmetry(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            a = rng.normal(size=6)
            b = rng.normal(size=6)
            assert score(a, b) == score(b, a)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            score(np.zeros(3), np.zeros(4))


def _random_pairs(rng, graph, n_pairs, n_max):
    pos, neg = [], []
    for _ in range(n_pairs):
        if rng.random() < 0.5:
            anchor = NodeId(Kind.USER, int(rng.integers(graph.n_users)))
            other_kind, n_other = Kind.ITEM, graph.n_items
        else:
            anchor = NodeId(Kind.ITEM, int(rng.integers(graph.n_items)))
            other_kind, n_other = Kind.USER, graph.n_users
        a = (anchor, int(rng.integers(1, n_max + 1)))
        p = (NodeId(other_kind, int(rng.integers(n_other))), int(rng.integers(1, n_max + 1)))
        n = (NodeId(other_kind, int(rng.integers(n_other))), int(rng.integers(1, n_max + 1)))
        pos.append((a, p))
        neg.append((a, n))
    return pos, neg


class TestBprStep:
    def test_equal_scores_give_ln2(self):
        g = _graph_from_pairs([(0, 0), (0, 1)], 1, 2)
        params = GnnParams(3, dim=2, n_max=2, l2=0.0, seed=18)
        table = propagate(g, params)
        spec = PoolingSpec.uniform(2)
        anchor = (NodeId(Kind.USER, 0), 1)
        same = (NodeId(Kind.ITEM, 0), 1)
        loss, _ = bpr_gradients(params, table, spec,
                                [(anchor, same)], [(anchor, same)])
        assert loss == pytest.approx(np.log(2.0), abs=1e-12)

    def test_large_margin_drives_loss_to_zero(self):
        g = _graph_from_pairs([(0, 0), (0, 1)], 1, 2)
        params = GnnParams(3, dim=2, n_max=2, l2=0.0, seed=19)
        params.layer0 = np.array([[50.0, 0.0], [50.0, 0.0], [-50.0, 0.0]])
        table = propagate(g, params)
        spec = PoolingSpec(PoolingMode.SUM, np.array([1.0, 0.0, 0.0]))
        anchor = (NodeId(Kind.USER, 0), 1)
        loss, _ = bpr_gradients(params, table, spec,
                                [(anchor, (NodeId(Kind.ITEM, 0), 1))],
                                [(anchor, (NodeId(Kind.ITEM, 1), 1))])
        assert loss < 1e-12

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(20)
        h = 1e-5
        for mode in (PoolingMode.SUM, PoolingMode.CONCAT):
            g = _random_graph(rng, 6, 7)
            params = GnnParams(g.n_nodes, dim=3, n_max=3, l2=1e-3, seed=21)
            spec = PoolingSpec.uniform(3, mode)
            pos, neg = _random_pairs(rng, g, 5, 3)
            table = propagate(g, params)
            _, grad = bpr_gradients(params, table, spec, pos, neg)
            fd = np.zeros_like(params.layer0)
            for i in range(g.n_nodes):
                for j in range(3):
                    orig = params.layer0[i, j]
                    params.layer0[i, j] = orig + h
                    lp, _ = bpr_gradients(params, propagate(g, params), spec, pos, neg)
                    params.layer0[i, j] = orig - h
                    lm, _ = bpr_gradients(params, propagate(g, params), spec, pos, neg)
                    params.layer0[i, j] = orig
                    fd[i, j] = (lp - lm) / (2 * h)
            rel = np.abs(grad - fd) / np.maximum(np.abs(fd), 1e-8)
            assert rel.max() < 1e-4

    def test_empty_batch_is_noop(self):
        g = _graph_from_pairs([(0, 0)], 1, 1)
        params = GnnParams(2, dim=2, n_max=2, seed=22)
        table = propagate(g, params)
        before = params.layer0.copy()
        assert bpr_step(params, table, PoolingSpec.uniform(2), [], []) == 0.0
        assert np.array_equal(params.layer0, before)

    def test_mismatched_anchors_rejected(self):
        g = _graph_from_pairs([(0, 0), (0, 1)], 1, 2)
        params = GnnParams(3, dim=2, n_max=2, seed=23)
        table = propagate(g, params)
        spec = PoolingSpec.uniform(2)
        pos = [((NodeId(Kind.USER, 0), 1), (NodeId(Kind.ITEM, 0), 1))]
        neg = [((NodeId(Kind.USER, 0), 2), (NodeId(Kind.ITEM, 1), 1))]
        with pytest.raises(ValueError):
            bpr_gradients(params, table, spec, pos, neg)

    def test_loss_non_increasing_on_fixed_batch(self):
        rng = np.random.default_rng(24)
        g = _random_graph(rng, 8, 9)
        params = GnnParams(g.n_nodes, dim=4, n_max=4, lr=1e-4, l2=1e-5, seed=25)
        spec = PoolingSpec.uniform(4)
        pos, neg = _random_pairs(rng, g, 6, 4)
        losses = []
        for _ in range(10):
            table = propagate(g, params)
            losses.append(bpr_step(params, table, spec, pos, neg))
        table = propagate(g, params)
        loss_end, _ = bpr_gradients(params, table, spec, pos, neg)
        losses.append(loss_end)
        for before, after in zip(losses, losses[1:]):
            assert after <= before + 1e-9

    def test_no_nan_after_many_random_steps(self):
        rng = np.random.default_rng(26)
        g = _random_graph(rng, 10, 10)
        params = GnnParams(g.n_nodes, dim=4, n_max=4, lr=1e-3, l2=1e-5, seed=27)
        spec = PoolingSpec.uniform(4)
        for _ in range(1000):
            pos, neg = _random_pairs(rng, g, 3, 4)
            table = propagate(g, params)
            bpr_step(params, table, spec, pos, neg)
        assert np.isfinite(params.layer0).all()
        assert np.isfinite(params.adam_m).all()
        assert np.isfinite(params.adam_v).all()


class TestArrayIo:
    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(28)
        meta = {"dim": 4, "n_max": 4, "note": "x", "rng": {"state": 12345678901234567890}}
        arrays = {"layer0": rng.normal(size=(6, 4)),
                  "adam_m": rng.normal(size=(6, 4)),
                  "step": np.array([3], dtype=np.int64)}
        blob = arrayio.dump_bytes(meta, arrays)
        meta2, arrays2 = arrayio.load_bytes(blob)
        assert meta2 == meta
        for name in arrays:
            assert np.array_equal(arrays[name], arrays2[name])
            assert arrays[name].dtype == arrays2[name].dtype
        assert arrayio.dump_bytes(meta2, arrays2) == blob

    def test_bad_magic_rejected(self):
        with pytest.raises(ValueError):
            arrayio.load_bytes(b"garbage")

    def test_file_round_trip(self, tmp_path):
        meta = {"a": 1}
        arrays = {"x": np.arange(6, dtype=np.float64).reshape(2, 3)}
        arrayio.save(tmp_path / "c.bin", meta, arrays)
        meta2, arrays2 = arrayio.load(tmp_path / "c.bin")
        assert meta2 == meta and np.array_equal(arrays2["x"], arrays["x"])
