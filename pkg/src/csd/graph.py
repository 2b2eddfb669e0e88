"""Immutable interned citation graph and connectivity machinery.

Node ids are dense integers assigned in ascending record-id order, so the
interning is reproducible across runs. The graph is a simple digraph:
self-loops and duplicate references are dropped upstream, dangling
references are skipped (and counted) at build time.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:
    from csd.corpus import Corpus


class GraphError(Exception):
    """Invalid graph construction or query."""


class UnionFind:
    """Disjoint sets over 0..n-1 with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.count = n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.count -= 1
        return True


@dataclass(frozen=True)
class SubgraphView:
    """A node subset together with the directed edges internal to it."""

    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        for u, w in self.edges:
            if u not in self.nodes or w not in self.nodes:
                raise GraphError(f"edge ({u}, {w}) leaves the node set")


@dataclass(frozen=True)
class BaseGraph:
    """Undirected view of a subgraph; pairs are stored as (min, max)."""

    nodes: frozenset[int]
    pairs: frozenset[tuple[int, int]]


@dataclass(frozen=True)
class CitationSeries:
    """Per-year citation counts for one paper, plus citers lacking a year."""

    counts: tuple[int, ...]
    missing_year: int


class CitationGraph:
    """Interned directed citation graph with forward and reverse adjacency."""

    def __init__(
        self,
        external_ids: Sequence[str],
        out_adj: Sequence[Sequence[int]],
        years: Sequence[int | None],
        skipped_dangling: int = 0,
    ):
        self.external_ids: tuple[str, ...] = tuple(external_ids)
        self.index: dict[str, int] = {eid: i for i, eid in enumerate(self.external_ids)}
        n = len(self.external_ids)
        in_lists: list[list[int]] = [[] for _ in range(n)]
        out_final: list[tuple[int, ...]] = []
        n_edges = 0
        for v, targets in enumerate(out_adj):
            uniq = sorted(set(targets))
            for u in uniq:
                if u == v:
                    raise GraphError(f"self-loop on node {v}")
                if not 0 <= u < n:
                    raise GraphError(f"edge target {u} out of range")
                in_lists[u].append(v)
            out_final.append(tuple(uniq))
            n_edges += len(uniq)
        self.out_adj: tuple[tuple[int, ...], ...] = tuple(out_final)
        self.in_adj: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(l)) for l in in_lists)
        self.years: tuple[int | None, ...] = tuple(years)
        self.skipped_dangling = skipped_dangling
        self.n_edges = n_edges

    def __len__(self) -> int:
        return len(self.external_ids)

    def __contains__(self, node: int) -> bool:
        return 0 <= node < len(self.external_ids)

    def node_of(self, external_id: str) -> int:
        try:
            return self.index[external_id]
        except KeyError:
            raise GraphError(f"unknown record id {external_id!r}") from None

    def has_edge(self, v: int, u: int) -> bool:
        adj = self.out_adj[v]
        lo, hi = 0, len(adj)
        while lo < hi:
            mid = (lo + hi) // 2
            if adj[mid] < u:
                lo = mid + 1
            else:
                hi = mid
        return lo < len(adj) and adj[lo] == u


def build(corpus: "Corpus") -> CitationGraph:
    """Intern a corpus into a citation graph; dangling references are skipped."""
    if len(corpus) == 0:
        raise GraphError("cannot build a graph from an empty corpus")
    external_ids = corpus.ids()
    index = {eid: i for i, eid in enumerate(external_ids)}
    out_adj: list[list[int]] = []
    years: list[int | None] = []
    skipped = 0
    for rec in corpus:
        targets = []
        for ref in rec.references:
            node = index.get(ref)
            if node is None:
                skipped += 1
            else:
                targets.append(node)
        out_adj.append(targets)
        years.append(rec.year)
    return CitationGraph(external_ids, out_adj, years, skipped_dangling=skipped)


def reference_set(g: CitationGraph, v: int) -> frozenset[int]:
    """All nodes cited by v."""
    if v not in g:
        raise GraphError(f"unknown node {v}")
    return frozenset(g.out_adj[v])


def induced_subgraph(g: CitationGraph, nodes: Iterable[int]) -> SubgraphView:
    """Subgraph on the given nodes with every internal directed edge."""
    node_set = frozenset(nodes)
    for n in node_set:
        if n not in g:
            raise GraphError(f"unknown node {n}")
    edges = frozenset(
        (u, w) for u in node_set for w in g.out_adj[u] if w in node_set
    )
    return SubgraphView(node_set, edges)


def base_graph(sub: SubgraphView) -> BaseGraph:
    """Collapse edge direction; antiparallel edges become a single pair."""
    pairs = frozenset((u, w) if u < w else (w, u) for u, w in sub.edges)
    return BaseGraph(sub.nodes, pairs)


def connected_component_count(bg: BaseGraph) -> int:
    """Number of connected components (0 for the empty graph)."""
    nodes = sorted(bg.nodes)
    if not nodes:
        return 0
    pos = {n: i for i, n in enumerate(nodes)}
    uf = UnionFind(len(nodes))
    for a, b in bg.pairs:
        uf.union(pos[a], pos[b])
    return uf.count


def weak_components(g: CitationGraph) -> dict[int, int]:
    """Label every node with its weak component; label = smallest member."""
    uf = UnionFind(len(g))
    for v, targets in enumerate(g.out_adj):
        for u in targets:
            uf.union(v, u)
    smallest: dict[int, int] = {}
    for v in range(len(g)):
        root = uf.find(v)
        if root not in smallest or v < smallest[root]:
            smallest[root] = v
    return {v: smallest[uf.find(v)] for v in range(len(g))}


def citation_series(g: CitationGraph, v: int, start_year: int, horizon: int) -> CitationSeries:
    """Citations of v bucketed by the citing paper's publication year.

    Bucket t counts citers published in ``start_year + t``. Citers without
    a year are excluded from the buckets but tallied in ``missing_year``.
    """
    if v not in g:
        raise GraphError(f"unknown node {v}")
    if horizon < 1:
        raise GraphError("horizon must be at least 1")
    counts = [0] * horizon
    missing = 0
    for citer in g.in_adj[v]:
        year = g.years[citer]
        if year is None:
            missing += 1
            continue
        t = year - start_year
        if 0 <= t < horizon:
            counts[t] += 1
    return CitationSeries(tuple(counts), missing)


def write_edges(g: CitationGraph, path: str | Path) -> None:
    """Dump the edge list as ``citing_id<TAB>cited_id`` lines, sorted."""
    lines = sorted(
        f"{g.external_ids[v]}\t{g.external_ids[u]}"
        for v in range(len(g))
        for u in g.out_adj[v]
    )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
