"""Gene networks from precision matrices: variable selection, hub measures, set comparisons."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np
from scipy import stats

from .glasso import PrecisionMatrix


@dataclass(frozen=True)
class GeneNetwork:
    """Undirected weighted graph over genes; edge weights are precision entries."""

    gene_ids: tuple
    edges: tuple  # (i, j, weight) with i < j, |weight| >= zero_epsilon
    scheme: str | None = None
    glioma_type: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "gene_ids", tuple(self.gene_ids))
        object.__setattr__(self, "edges", tuple(self.edges))
        seen = set()
        for i, j, w in self.edges:
            if i == j:
                raise ValueError("self-loop on node %d" % i)
            if i > j:
                raise ValueError("edge (%d, %d) not in i < j order" % (i, j))
            if (i, j) in seen:
                raise ValueError("duplicate edge (%d, %d)" % (i, j))
            if w == 0:
                raise ValueError("zero-weight edge (%d, %d)" % (i, j))
            seen.add((i, j))

    @property
    def n_genes(self) -> int:
        return len(self.gene_ids)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_genes, dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def weight_sums(self) -> np.ndarray:
        w = np.zeros(self.n_genes)
        for i, j, wij in self.edges:
            w[i] += abs(wij)
            w[j] += abs(wij)
        return w


@dataclass(frozen=True)
class HubRanking:
    gene_ids: tuple
    weight_measure: np.ndarray
    count_measure: np.ndarray
    percentile_w: np.ndarray  # nan for isolated genes
    percentile_c: np.ndarray
    is_hub: np.ndarray
    threshold: float

    def hubs(self) -> set:
        return {g for g, h in zip(self.gene_ids, self.is_hub) if h}


@dataclass(frozen=True)
class SetComparison:
    names: tuple
    sizes: dict
    intersections: dict  # frozenset of names -> cardinality of exact region
    exclusive: dict      # name -> frozenset of members in no other set
    exclusive_pct: dict  # name -> 100 * |exclusive| / |set|


def extract_network(prec: PrecisionMatrix, zero_epsilon: float = 1e-8,
                    scheme=None, glioma_type=None) -> GeneNetwork:
    """Edges are the off-diagonal precision entries at or above ``zero_epsilon``."""
    theta = prec.theta
    p = prec.p
    edges = []
    for i in range(p):
        for j in range(i + 1, p):
            if abs(theta[i, j]) >= zero_epsilon:
                edges.append((i, j, float(theta[i, j])))
    return GeneNetwork(prec.gene_ids, tuple(edges), scheme, glioma_type)


def select_variables(net: GeneNetwork) -> set:
    """Genes with at least one connection: the network-based variable selection."""
    deg = net.degrees()
    return {net.gene_ids[i] for i in range(net.n_genes) if deg[i] >= 1}


def hub_ranking(net: GeneNetwork, t: float = 60.0) -> HubRanking:
    """Weight and count hub measures with rank-uniform percentile rescaling.

    Percentiles are computed over the connected genes only, as
    100 * rank / N with average ranks for ties; a gene is a hub when either
    percentile exceeds ``t`` (union rule).
    """
    if not 0 < t < 100:
        raise ValueError("hub threshold t must lie in (0, 100)")
    m_w = net.weight_sums()
    m_c = net.degrees().astype(float)
    connected = m_c > 0
    n_conn = int(connected.sum())
    if n_conn == 0:
        raise ValueError("no connected variables to rank")
    pct_w = np.full(net.n_genes, np.nan)
    pct_c = np.full(net.n_genes, np.nan)
    pct_w[connected] = 100.0 * stats.rankdata(m_w[connected], method="average") / n_conn
    pct_c[connected] = 100.0 * stats.rankdata(m_c[connected], method="average") / n_conn
    is_hub = np.zeros(net.n_genes, dtype=bool)
    is_hub[connected] = (pct_w[connected] > t) | (pct_c[connected] > t)
    return HubRanking(net.gene_ids, m_w, m_c.astype(int), pct_w, pct_c, is_hub, t)


def compare_sets(named_sets: dict) -> SetComparison:
    """Intersection cardinalities and exclusive members for 2 or 3 named gene sets."""
    names = tuple(named_sets)
    if len(names) not in (2, 3):
        raise ValueError("compare_sets expects 2 or 3 named sets, got %d" % len(names))
    sets = {n: frozenset(named_sets[n]) for n in names}
    universe = frozenset().union(*sets.values())
    regions = {}
    for member_names in _nonempty_subsets(names):
        key = frozenset(member_names)
        inside = frozenset.intersection(*(sets[n] for n in member_names))
        outside = frozenset().union(*(sets[n] for n in names if n not in member_names)) \
            if len(member_names) < len(names) else frozenset()
        regions[key] = len(inside - outside)
    exclusive = {n: sets[n] - frozenset().union(*(sets[m] for m in names if m != n))
                 for n in names}
    exclusive_pct = {n: (100.0 * len(exclusive[n]) / len(sets[n]) if sets[n] else 0.0)
                     for n in names}
    del universe
    return SetComparison(
        names=names,
        sizes={n: len(sets[n]) for n in names},
        intersections=regions,
        exclusive=exclusive,
        exclusive_pct=exclusive_pct,
    )


def _nonempty_subsets(names):
    out = []
    n = len(names)
    for mask in range(1, 2 ** n):
        out.append(tuple(names[i] for i in range(n) if mask >> i & 1))
    return out


def cross_rank_lookup(ranking_a: HubRanking, hubs_b) -> dict:
    """Percentiles in ``ranking_a`` of the genes in ``hubs_b``.

    Returns gene -> (percentile_w, percentile_c, average), or None for genes
    absent from (or isolated in) ``ranking_a``.
    """
    index = {g: k for k, g in enumerate(ranking_a.gene_ids)}
    out = {}
    for g in sorted(hubs_b):
        k = index.get(g)
        if k is None or np.isnan(ranking_a.percentile_w[k]):
            out[g] = None
        else:
            pw = float(ranking_a.percentile_w[k])
            pc = float(ranking_a.percentile_c[k])
            out[g] = (pw, pc, (pw + pc) / 2.0)
    return out


def neighborhood_subgraph(net: GeneNetwork, seed) -> GeneNetwork:
    """Induced subgraph on the seed genes plus their direct neighbors."""
    index = {g: k for k, g in enumerate(net.gene_ids)}
    missing = [g for g in seed if g not in index]
    if missing:
        raise ValueError("seed genes not in network: %s" % ", ".join(map(str, sorted(missing)[:5])))
    seed_idx = {index[g] for g in seed}
    keep = set(seed_idx)
    for i, j, _ in net.edges:
        if i in seed_idx:
            keep.add(j)
        if j in seed_idx:
            keep.add(i)
    order = sorted(keep)
    remap = {old: new for new, old in enumerate(order)}
    sub_genes = tuple(net.gene_ids[i] for i in order)
    sub_edges = tuple((remap[i], remap[j], w) for i, j, w in net.edges
                      if i in keep and j in keep)
    return GeneNetwork(sub_genes, sub_edges, net.scheme, net.glioma_type)


def write_hub_ranking(ranking: HubRanking, path, sep: str = "\t") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(sep.join(("gene", "m_w", "m_c", "pct_w", "pct_c", "hub")) + "\n")
        for k, g in enumerate(ranking.gene_ids):
            fh.write(sep.join((
                str(g),
                repr(float(ranking.weight_measure[k])),
                str(int(ranking.count_measure[k])),
                repr(float(ranking.percentile_w[k])),
                repr(float(ranking.percentile_c[k])),
                "1" if ranking.is_hub[k] else "0",
            )) + "\n")


def _node_attrs(gene, exclusive, hubs, prognostic):
    return {
        "exclusive": gene in exclusive,
        "hub": gene in hubs,
        "prognostic": gene in prognostic,
    }


def write_dot(net: GeneNetwork, path, exclusive=(), hubs=(), prognostic=()) -> None:
    """Plain DOT export; layout is left to external viewers."""
    exclusive, hubs, prognostic = set(exclusive), set(hubs), set(prognostic)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("graph gene_network {\n")
        for g in net.gene_ids:
            a = _node_attrs(g, exclusive, hubs, prognostic)
            fh.write('  "%s" [exclusive=%s, hub=%s, prognostic=%s];\n'
                     % (g, str(a["exclusive"]).lower(), str(a["hub"]).lower(),
                        str(a["prognostic"]).lower()))
        for i, j, w in net.edges:
            fh.write('  "%s" -- "%s" [weight=%s];\n'
                     % (net.gene_ids[i], net.gene_ids[j], repr(float(w))))
        fh.write("}\n")


def write_graphml(net: GeneNetwork, path, exclusive=(), hubs=(), prognostic=()) -> None:
    exclusive, hubs, prognostic = set(exclusive), set(hubs), set(prognostic)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write('<?xml version="1.0" encoding="UTF-8"?>\n')
        fh.write('<graphml xmlns="http://graphml.graphdrawing.org/xmlns">\n')
        for key, kind in (("exclusive", "node"), ("hub", "node"), ("prognostic", "node")):
            fh.write('  <key id="%s" for="%s" attr.name="%s" attr.type="boolean"/>\n'
                     % (key, kind, key))
        fh.write('  <key id="weight" for="edge" attr.name="weight" attr.type="double"/>\n')
        fh.write('  <graph edgedefault="undirected">\n')
        for g in net.gene_ids:
            a = _node_attrs(g, exclusive, hubs, prognostic)
            fh.write('    <node id="%s">\n' % escape(str(g), {'"': "&quot;"}))
            for key in ("exclusive", "hub", "prognostic"):
                fh.write('      <data key="%s">%s</data>\n' % (key, str(a[key]).lower()))
            fh.write('    </node>\n')
        for i, j, w in net.edges:
            fh.write('    <edge source="%s" target="%s"><data key="weight">%s</data></edge>\n'
                     % (escape(str(net.gene_ids[i]), {'"': "&quot;"}),
                        escape(str(net.gene_ids[j]), {'"': "&quot;"}),
                        repr(float(w))))
        fh.write('  </graph>\n</graphml>\n')


def write_set_comparison(cmp: SetComparison, path, sep: str = "\t") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(sep.join(("region", "cardinality")) + "\n")
        for key in sorted(cmp.intersections, key=lambda k: (len(k), sorted(k))):
            fh.write(sep.join(("&".join(sorted(key)), str(cmp.intersections[key]))) + "\n")
        fh.write(sep.join(("name", "size", "n_exclusive", "exclusive_pct")) + "\n")
        for n in cmp.names:
            fh.write(sep.join((n, str(cmp.sizes[n]), str(len(cmp.exclusive[n])),
                               repr(float(cmp.exclusive_pct[n])))) + "\n")
