import numpy as np
import networkx as nx
import pytest

from adarec.graph import (CoreFilterError, Graph, InteractionSet, Kind,
                          LineFormatError, NodeId, khop_subgraph,
                          load_interactions, load_kg, read_interaction_file,
                          split, write_id_map, write_interaction_file)


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _random_interactions(rng, n_users, n_items, n_pairs):
    pairs = {(int(rng.integers(n_users)), int(rng.integers(n_items)))
             for _ in range(n_pairs)}
    return InteractionSet(pairs, n_users, n_items)


def _nx_graph(graph):
    g = nx.Graph()
    g.add_nodes_from(range(graph.n_nodes))
    for gid in range(graph.n_nodes):
        for nb in graph.neighbors(gid):
            g.add_edge(gid, int(nb))
    return g


def _core_oracle(pairs, core):
    # naive iterative deletion until fixpoint
    pairs = set(pairs)
    while True:
        from collections import Counter
        u_deg = Counter(u for u, _ in pairs)
        v_deg = Counter(v for _, v in pairs)
        kept = {(u, v) for u, v in pairs
                if u_deg[u] >= core and v_deg[v] >= core}
        if kept == pairs:
            return pairs
        pairs = kept


class TestLoadInteractions:
    def test_single_pair_core_one(self, tmp_path):
        path = _write(tmp_path, "i.txt", "5 9\n")
        iset = load_interactions(path, core=1)
        assert iset.n_pairs == 1
        assert iset.n_users == 1 and iset.n_items == 1
        assert iset.user_original[0] == 5 and iset.item_original[0] == 9

    def test_core_filter_cascades_to_empty(self, tmp_path):
        # user A has 10 items, user B shares one; core=10 removes B, then the
        # shared item drops under 10, then A follows: the fixpoint is empty
        lines = ["0 " + " ".join(str(i) for i in range(10)), "1 0"]
        path = _write(tmp_path, "i.txt", "\n".join(lines) + "\n")
        with pytest.raises(CoreFilterError, match="graph emptied by core filter"):
            load_interactions(path, core=10)

    def test_core_filter_matches_oracle(self, tmp_path):
        rng = np.random.default_rng(0)
        for trial in range(20):
            n_users, n_items = 12, 14
            pairs = {(int(rng.integers(n_users)), int(rng.integers(n_items)))
                     for _ in range(60)}
            lines = {}
            for u, v in sorted(pairs):
                lines.setdefault(u, []).append(v)
            text = "\n".join(f"{u} " + " ".join(map(str, vs))
                             for u, vs in lines.items())
            path = _write(tmp_path, f"t{trial}.txt", text + "\n")
            core = int(rng.integers(2, 5))
            expected = _core_oracle(pairs, core)
            if not expected:
                with pytest.raises(CoreFilterError):
                    load_interactions(path, core)
                continue
            iset = load_interactions(path, core)
            back = {(int(iset.user_original[u]), int(iset.item_original[v]))
                    for u, v in iset.pair_array}
            assert back == expected
            assert all(len(vs) >= core for vs in iset.user_items)
            assert all(len(us) >= core for us in iset.item_users)

    def test_malformed_line_names_line_number(self, tmp_path):
        path = _write(tmp_path, "bad.txt", "0 1 2\n1 x 3\n")
        with pytest.raises(LineFormatError, match=":2:"):
            load_interactions(path, core=1)

    def test_negative_id_rejected(self, tmp_path):
        path = _write(tmp_path, "neg.txt", "0 -1\n")
        with pytest.raises(LineFormatError, match=":1:"):
            load_interactions(path, core=1)


class TestLoadKg:
    def test_empty_file(self, tmp_path):
        path = _write(tmp_path, "kg.txt", "")
        kg = load_kg(path, n_items=3)
        assert kg.triples == [] and kg.n_relations == 0 and kg.n_entities == 0

    def test_single_triple_fuses_adjacency(self, tmp_path):
        path = _write(tmp_path, "kg.txt", "0 0 3\n")
        kg = load_kg(path, n_items=3)
        assert kg.n_entities == 1 and kg.n_relations == 1
        iset = InteractionSet([(0, 0)], 1, 3)
        g = Graph(iset, kg, max_hops=2)
        item0 = g.gid(NodeId(Kind.ITEM, 0))
        entity0 = g.gid(NodeId(Kind.ENTITY, 0))
        assert entity0 in set(g.neighbors(item0).tolist())
        assert item0 in set(g.neighbors(entity0).tolist())

    def test_dangling_entity_rejected(self, tmp_path):
        path = _write(tmp_path, "kg.txt", "0 0 9\n")
        with pytest.raises(ValueError, match="dangling entity id"):
            load_kg(path, n_items=3, declared_entities=5)

    def test_relation_vocab_densified(self, tmp_path):
        path = _write(tmp_path, "kg.txt", "0 7 3\n1 2 4\n")
        kg = load_kg(path, n_items=3)
        assert kg.n_relations == 2
        assert sorted(t.relation for t in kg.triples) == [0, 1]
        assert kg.relation_original.tolist() == [2, 7]

    def test_bad_arity(self, tmp_path):
        path = _write(tmp_path, "kg.txt", "0 1\n")
        with pytest.raises(LineFormatError, match=":1:"):
            load_kg(path, n_items=3)


class TestSplit:
    def test_counts_ten_interactions(self):
        iset = InteractionSet([(0, v) for v in range(10)], 1, 10)
        parts = split(iset, 0.8, 0.1, seed=3)
        assert parts.train.n_pairs == 7
        assert parts.validation.n_pairs == 1
        assert parts.test.n_pairs == 2

    def test_deterministic_and_disjoint(self, tmp_path):
        rng = np.random.default_rng(5)
        iset = _random_interactions(rng, 30, 40, 400)
        a = split(iset, 0.8, 0.1, seed=11)
        b = split(iset, 0.8, 0.1, seed=11)
        for part in ("train", "validation", "test"):
            pa, pb = tmp_path / f"a_{part}.txt", tmp_path / f"b_{part}.txt"
            write_interaction_file(getattr(a, part), pa)
            write_interaction_file(getattr(b, part), pb)
            assert pa.read_bytes() == pb.read_bytes()
        sets = [set(p.as_pairs()) for p in (a.train, a.validation, a.test)]
        assert not (sets[0] & sets[1]) and not (sets[0] & sets[2]) and not (sets[1] & sets[2])
        assert sets[0] | sets[1] | sets[2] == set(iset.as_pairs())

    def test_every_eval_user_appears_in_train(self):
        rng = np.random.default_rng(6)
        iset = _random_interactions(rng, 25, 25, 200)
        parts = split(iset, 0.8, 0.1, seed=0)
        train_users = {u for u, _ in parts.train.as_pairs()}
        for part in (parts.validation, parts.test):
            assert {u for u, _ in part.as_pairs()} <= train_users

    def test_single_interaction_user_stays_in_train(self):
        iset = InteractionSet([(0, 0), (1, 0), (1, 1), (1, 2)], 2, 3)
        parts = split(iset, 0.5, 0.5, seed=0)
        assert parts.train.has(0, 0)
        assert not any(u == 0 for u, _ in parts.test.as_pairs())
        assert not any(u == 0 for u, _ in parts.validation.as_pairs())

    def test_test_fraction_close_to_complement(self):
        rng = np.random.default_rng(7)
        iset = _random_interactions(rng, 50, 60, 900)
        parts = split(iset, 0.8, 0.1, seed=2)
        # per-user flooring bound: test gets n - floor(0.8 n) in [0.2n, 0.2n + 1)
        expected = sum(len(iset.items_of(u)) - max(1, int(np.floor(0.8 * len(iset.items_of(u)))))
                       for u in range(50) if len(iset.items_of(u)) >= 2)
        assert parts.test.n_pairs == expected
        assert abs(parts.test.n_pairs - 0.2 * iset.n_pairs) <= 50

    def test_bad_fractions(self):
        iset = InteractionSet([(0, 0), (0, 1)], 1, 2)
        with pytest.raises(ValueError):
            split(iset, 1.0, 0.1, seed=0)
        with pytest.raises(ValueError):
            split(iset, 0.8, 0.0, seed=0)


class TestKhop:
    def test_star_one_hop(self):
        iset = InteractionSet([(0, 0), (0, 1), (0, 2)], 1, 3)
        g = Graph(iset, max_hops=2)
        got = khop_subgraph(g, NodeId(Kind.USER, 0), 1)
        assert got == {NodeId(Kind.USER, 0), NodeId(Kind.ITEM, 0),
                       NodeId(Kind.ITEM, 1), NodeId(Kind.ITEM, 2)}

    def test_two_hop_user_candidates(self):
        # u0-i0, u0-i1, i0-u1, i1-u2, u2-i2, i2-u3: two hops from u0 reach
        # users {u0, u1, u2}; u3 sits four hops away
        iset = InteractionSet([(0, 0), (0, 1), (1, 0), (2, 1), (2, 2), (3, 2)], 4, 3)
        g = Graph(iset, max_hops=4)
        cands = g.same_kind_within(NodeId(Kind.USER, 0), 2)
        assert cands.tolist() == [0, 1, 2]
        full = khop_subgraph(g, NodeId(Kind.USER, 0), 2)
        assert {n for n in full if n.kind == Kind.USER} == {
            NodeId(Kind.USER, 0), NodeId(Kind.USER, 1), NodeId(Kind.USER, 2)}

    def test_isolated_center(self):
        iset = InteractionSet([(0, 0)], 2, 1)
        g = Graph(iset, max_hops=2)
        assert khop_subgraph(g, NodeId(Kind.USER, 1), 2) == {NodeId(Kind.USER, 1)}
        assert g.same_kind_within(NodeId(Kind.USER, 1), 1).tolist() == [1]

    def test_matches_networkx_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            iset = _random_interactions(rng, 20, 25, 70)
            g = Graph(iset, max_hops=4)
            nxg = _nx_graph(g)
            for _ in range(5):
                gid = int(rng.integers(g.n_users + g.n_items))
                node = g.node_of(gid)
                k = int(rng.integers(1, 5))
                lengths = nx.single_source_shortest_path_length(nxg, gid, cutoff=k)
                expected = {g.node_of(x) for x in lengths}
                assert khop_subgraph(g, node, k) == expected

    def test_index_and_bfs_paths_agree(self):
        rng = np.random.default_rng(10)
        for _ in range(5):
            iset = _random_interactions(rng, 15, 18, 50)
            indexed = Graph(iset, max_hops=4, khop_threshold=100_000)
            lazy = Graph(iset, max_hops=4, khop_threshold=0)
            assert indexed.has_khop_index and not lazy.has_khop_index
            for gid in range(indexed.n_users + indexed.n_items):
                node = indexed.node_of(gid)
                for k in range(1, 5):
                    a = indexed.same_kind_within(node, k)
                    b = lazy.same_kind_within(node, k)
                    assert a.tolist() == b.tolist()

    def test_hop_bounds_enforced(self):
        iset = InteractionSet([(0, 0)], 1, 1)
        g = Graph(iset, max_hops=3)
        with pytest.raises(ValueError):
            g.same_kind_within(NodeId(Kind.USER, 0), 0)
        with pytest.raises(ValueError):
            khop_subgraph(g, NodeId(Kind.USER, 0), 4)


class TestGraphStructure:
    def test_adjacency_symmetric_after_fusion(self, tmp_path):
        kg_path = _write(tmp_path, "kg.txt", "0 0 5\n5 1 6\n1 0 6\n")
        kg = load_kg(kg_path, n_items=3)
        iset = InteractionSet([(0, 0), (0, 1), (1, 2)], 2, 3)
        g = Graph(iset, kg, max_hops=3)
        adj = g.adjacency.toarray()
        assert np.array_equal(adj, adj.T)

    def test_bipartite_adjacency_equals_interactions(self):
        iset = InteractionSet([(0, 0), (1, 0), (1, 1)], 2, 2)
        g = Graph(iset, max_hops=2)
        edges = set()
        for gid in range(g.n_nodes):
            for nb in g.neighbors(gid):
                edges.add((min(gid, int(nb)), max(gid, int(nb))))
        expected = {(u, g.gid(NodeId(Kind.ITEM, v))) for u, v in iset.as_pairs()}
        assert edges == expected

    def test_normalized_adjacency_rows(self):
        iset = InteractionSet([(0, 0), (1, 0)], 2, 1)
        g = Graph(iset, max_hops=2)
        norm = g.normalized_adjacency.toarray()
        item = g.gid(NodeId(Kind.ITEM, 0))
        assert norm[0, item] == pytest.approx(1 / np.sqrt(2))
        assert norm[item, 0] == pytest.approx(1 / np.sqrt(2))


class TestFileRoundTrips:
    def test_interaction_file_round_trip(self, tmp_path):
        rng = np.random.default_rng(12)
        iset = _random_interactions(rng, 10, 12, 40)
        path = tmp_path / "x.txt"
        write_interaction_file(iset, path)
        back = read_interaction_file(path, 10, 12)
        assert back.as_pairs() == iset.as_pairs()

    def test_id_map_format(self, tmp_path):
        path = tmp_path / "u.idmap"
        write_id_map(np.array([7, 9, 42]), path)
        assert path.read_text() == "7 0\n9 1\n42 2\n"

    def test_read_rejects_out_of_range(self, tmp_path):
        path = _write(tmp_path, "r.txt", "0 5\n")
        with pytest.raises(LineFormatError):
            read_interaction_file(path, 1, 3)
