from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netsurv.glasso import PrecisionMatrix
from netsurv.netselect import (GeneNetwork, compare_sets, cross_rank_lookup,
                               extract_network, hub_ranking, neighborhood_subgraph,
                               select_variables, write_dot, write_graphml)


def prec_of(theta, ids=None):
    theta = np.asarray(theta, dtype=float)
    p = theta.shape[0]
    ids = ids or tuple("g%d" % i for i in range(p))
    return PrecisionMatrix(ids, theta, 0.1, True, 1, 0.0)


def star(p=6, w=0.5):
    """Star graph: node 0 connected to all others."""
    theta = np.eye(p) * 2.0
    for j in range(1, p):
        theta[0, j] = theta[j, 0] = w
    return prec_of(theta)


class TestExtractNetwork:
    def test_edges_above_threshold_only(self):
        theta = np.array([[1.0, 0.5, 1e-12], [0.5, 1.0, 0.0], [1e-12, 0.0, 1.0]])
        net = extract_network(prec_of(theta))
        assert net.edges == ((0, 1, 0.5),)

    def test_edge_count_matches_upper_triangle(self, rng):
        theta = np.eye(7)
        pairs = [(0, 3), (1, 2), (4, 6)]
        for i, j in pairs:
            theta[i, j] = theta[j, i] = 0.3
        net = extract_network(prec_of(theta))
        assert [(i, j) for i, j, _ in net.edges] == sorted(pairs)

    def test_self_loop_rejected_in_constructor(self):
        with pytest.raises(ValueError, match="self-loop"):
            GeneNetwork(("a", "b"), ((0, 0, 1.0),))

    def test_unordered_edge_rejected(self):
        with pytest.raises(ValueError, match="order"):
            GeneNetwork(("a", "b"), ((1, 0, 1.0),))


class TestSelectVariables:
    def test_isolated_excluded(self):
        theta = np.eye(4)
        theta[0, 1] = theta[1, 0] = 0.2
        assert select_variables(extract_network(prec_of(theta))) == {"g0", "g1"}

    def test_all_isolated_empty(self):
        assert select_variables(extract_network(prec_of(np.eye(3)))) == set()


class TestHubRanking:
    def test_star_center_is_unique_hub(self):
        r = hub_ranking(extract_network(star(8)), t=60.0)
        assert r.hubs() == {"g0"}

    def test_leaf_percentiles_tie(self):
        # star on 8 nodes: 7 leaves share degree 1 and weight 0.5, so each leaf
        # percentile is 100 * mean-rank(1..7)/8 = 100 * 4 / 8 = 50
        r = hub_ranking(extract_network(star(8)), t=60.0)
        for k in range(1, 8):
            assert r.percentile_c[k] == pytest.approx(50.0)
            assert r.percentile_w[k] == pytest.approx(50.0)
        assert r.percentile_c[0] == pytest.approx(100.0)

    def test_isolated_gene_nan(self):
        theta = np.eye(3)
        theta[0, 1] = theta[1, 0] = 0.2
        r = hub_ranking(extract_network(prec_of(theta)))
        assert np.isnan(r.percentile_w[2]) and np.isnan(r.percentile_c[2])
        assert not r.is_hub[2]

    def test_union_rule(self):
        # g0 wins on weight (one heavy edge), g3 wins on count (two light edges)
        theta = np.eye(5) * 3.0
        theta[0, 1] = theta[1, 0] = 2.0
        theta[3, 2] = theta[2, 3] = 0.1
        theta[3, 4] = theta[4, 3] = 0.1
        r = hub_ranking(extract_network(prec_of(theta)), t=79.0)
        # connected: all 5. weight sums: g0=2, g1=2, g2=.1, g3=.2, g4=.1
        # pct_w ranks (avg ties): g0,g1 -> 4.5/5=90; degree ranks: g3 unique max -> 100
        assert r.is_hub[0] and r.is_hub[1] and r.is_hub[3]
        assert not r.is_hub[2] and not r.is_hub[4]

    def test_threshold_strict_inequality(self):
        # two connected genes, identical measures: both percentiles are 75 on avg?
        # no -- both tie at rank 1.5/2 -> 75; with t=75 neither exceeds strictly
        theta = np.eye(2)
        theta[0, 1] = theta[1, 0] = 0.4
        r = hub_ranking(extract_network(prec_of(theta)), t=75.0)
        assert not r.is_hub.any()
        r2 = hub_ranking(extract_network(prec_of(theta)), t=74.0)
        assert r2.is_hub.all()

    def test_weight_uses_absolute_values(self):
        theta = np.eye(3) * 2.0
        theta[0, 1] = theta[1, 0] = -0.7
        theta[1, 2] = theta[2, 1] = 0.2
        r = hub_ranking(extract_network(prec_of(theta)))
        assert r.weight_measure[1] == pytest.approx(0.9)

    def test_no_connected_errors(self):
        with pytest.raises(ValueError, match="no connected variables"):
            hub_ranking(extract_network(prec_of(np.eye(3))))

    def test_bad_threshold(self):
        net = extract_network(star(4))
        for t in (0.0, 100.0, -5.0):
            with pytest.raises(ValueError, match="threshold"):
                hub_ranking(net, t=t)


class TestCompareSets:
    def test_three_way_enumeration(self):
        a = {"x", "y", "z", "w"}
        b = {"y", "z", "q"}
        c = {"z", "q", "r"}
        cmp = compare_sets({"A": a, "B": b, "C": c})
        assert cmp.intersections[frozenset({"A", "B", "C"})] == 1  # {z}
        assert cmp.intersections[frozenset({"A", "B"})] == 1       # {y}
        assert cmp.intersections[frozenset({"B", "C"})] == 1       # {q}
        assert cmp.intersections[frozenset({"A", "C"})] == 0
        assert cmp.intersections[frozenset({"A"})] == 2            # {x, w}
        assert cmp.exclusive["A"] == {"x", "w"}
        assert cmp.exclusive_pct["A"] == pytest.approx(50.0)

    def test_two_way(self):
        cmp = compare_sets({"A": {1, 2, 3}, "B": {3, 4}})
        assert cmp.intersections[frozenset({"A", "B"})] == 1
        assert cmp.intersections[frozenset({"A"})] == 2
        assert cmp.intersections[frozenset({"B"})] == 1

    def test_wrong_arity(self):
        with pytest.raises(ValueError, match="2 or 3"):
            compare_sets({"A": {1}})

    @given(st.lists(st.sets(st.integers(0, 20)), min_size=3, max_size=3))
    @settings(max_examples=50, deadline=None)
    def test_regions_partition_union(self, sets):
        named = {n: s for n, s in zip("ABC", sets)}
        cmp = compare_sets(named)
        union = set().union(*sets)
        assert sum(cmp.intersections.values()) == len(union)
        # inclusion-exclusion: each set size equals the sum of its regions
        for n in "ABC":
            total = sum(v for k, v in cmp.intersections.items() if n in k)
            assert total == len(named[n])


class TestCrossRankAndSubgraph:
    def test_cross_rank_values(self):
        r = hub_ranking(extract_network(star(8)))
        out = cross_rank_lookup(r, {"g0", "g3", "zzz"})
        assert out["zzz"] is None
        pw, pc, avg = out["g0"]
        assert pw == pytest.approx(100.0) and pc == pytest.approx(100.0)
        assert avg == pytest.approx(100.0)
        assert out["g3"][2] == pytest.approx(50.0)

    def test_cross_rank_isolated_is_none(self):
        theta = np.eye(3)
        theta[0, 1] = theta[1, 0] = 0.2
        r = hub_ranking(extract_network(prec_of(theta)))
        assert cross_rank_lookup(r, {"g2"})["g2"] is None

    def test_neighborhood_subgraph(self):
        # path g0 - g1 - g2 - g3: neighborhood of g1 is {g0, g1, g2}
        theta = np.eye(4) * 2.0
        for i in range(3):
            theta[i, i + 1] = theta[i + 1, i] = 0.3
        net = extract_network(prec_of(theta))
        sub = neighborhood_subgraph(net, {"g1"})
        assert sub.gene_ids == ("g0", "g1", "g2")
        assert [(i, j) for i, j, _ in sub.edges] == [(0, 1), (1, 2)]

    def test_subgraph_missing_seed(self):
        net = extract_network(star(4))
        with pytest.raises(ValueError, match="not in network"):
            neighborhood_subgraph(net, {"nope"})


class TestExports:
    def test_dot_contains_nodes_edges_attrs(self, tmp_path):
        net = extract_network(star(4))
        path = tmp_path / "n.dot"
        write_dot(net, path, hubs={"g0"}, exclusive={"g1"})
        text = path.read_text()
        assert '"g0" [exclusive=false, hub=true, prognostic=false];' in text
        assert '"g1" [exclusive=true, hub=false, prognostic=false];' in text
        assert '"g0" -- "g1" [weight=0.5];' in text

    def test_graphml_well_formed(self, tmp_path):
        import xml.etree.ElementTree as ET
        net = extract_network(star(5))
        path = tmp_path / "n.graphml"
        write_graphml(net, path, hubs={"g0"})
        root = ET.parse(path).getroot()
        ns = "{http://graphml.graphdrawing.org/xmlns}"
        graph = root.find(ns + "graph")
        nodes = graph.findall(ns + "node")
        edges = graph.findall(ns + "edge")
        assert len(nodes) == 5 and len(edges) == 4
        assert {e.get("source") for e in edges} == {"g0"}
