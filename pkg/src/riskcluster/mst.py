"""Minimum spanning forest over mutual reachability edges.

Kruskal with a parallel sort is the production path; prim_dense is the O(n^2)
reference that materializes nothing bigger than a row. Every edge comparison
anywhere in this module uses the full (w, u, v) tuple, which makes the
minimum forest unique and both algorithms agree edge for edge.
"""

from dataclasses import dataclass

import numpy as np

from .knn import sqdist_exact
from .parallel import parallel_argsort
from .reach import EdgeList


@dataclass(frozen=True)
class SpanningForest:
    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    component_count: int

    def total_weight(self):
        return float(self.w.sum())

    def __len__(self):
        return self.u.shape[0]


class UnionFind:
    """Array-backed disjoint sets, path compression plus union by rank."""

    def __init__(self, n):
        self.parent = np.arange(n, dtype=np.int64)
        self.rank = np.zeros(n, dtype=np.int64)

    def find(self, a):
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return int(root)

    def union(self, a, b):
        """Join the sets of a and b; returns the new root, or -1 if same."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return -1
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return ra


def sorted_edge_order(u, v, w, threads=1):
    """Permutation putting edges in ascending (w, u, v) order.

    The weight sort runs chunk-parallel; runs of equal weights are then
    re-ordered by (u, v), so the result is one canonical total order no
    matter how many threads sorted it.
    """
    order = parallel_argsort(w, threads)
    ws = w[order]
    if ws.size > 1:
        tied = np.flatnonzero(ws[1:] == ws[:-1])
        if tied.size:
            # runs of equal weight: [start, stop) spans over `order`
            starts = tied[np.concatenate([[True], np.diff(tied) > 1])]
            for start in starts:
                stop = start + 1
                while stop < ws.size and ws[stop] == ws[start]:
                    stop += 1
                seg = order[start:stop]
                seg_order = np.lexsort((v[seg], u[seg]))
                order[start:stop] = seg[seg_order]
    return order


def _batch_roots(parent, nodes):
    """Roots for a batch of nodes by repeated gathering (no writes)."""
    roots = parent[nodes]
    while True:
        nxt = parent[roots]
        if np.array_equal(nxt, roots):
            return roots
        roots = nxt


def kruskal_forest(edges, n, threads=1):
    """Greedy forest from edges sorted by (w, u, v); O(m alpha) accept pass.

    Most edges are rejected; batches are pre-filtered with a vectorized root
    comparison so the sequential union-find only touches candidates.
    """
    m = len(edges)
    order = sorted_edge_order(edges.u, edges.v, edges.w, threads)
    us = edges.u[order]
    vs = edges.v[order]
    ws = edges.w[order]
    uf = UnionFind(n)
    out_u = []
    out_v = []
    out_w = []
    accepted = 0
    batch = 1 << 18
    for start in range(0, m, batch):
        if accepted == n - 1:
            break
        stop = min(start + batch, m)
        ru = _batch_roots(uf.parent, us[start:stop])
        rv = _batch_roots(uf.parent, vs[start:stop])
        for i in (start + np.flatnonzero(ru != rv)):
            if uf.union(us[i], vs[i]) >= 0:
                out_u.append(us[i])
                out_v.append(vs[i])
                out_w.append(ws[i])
                accepted += 1
                if accepted == n - 1:
                    break
    return SpanningForest(
        n=n,
        u=np.array(out_u, dtype=np.int64),
        v=np.array(out_v, dtype=np.int64),
        w=np.array(out_w, dtype=np.float64),
        component_count=n - accepted,
    )


def prim_dense(points, core, threads=1):
    """Exact MST of the complete mutual reachability graph, O(n) memory.

    Each step expands the tree by the smallest frontier edge under the
    (w, u, v) order, computing the new vertex's distance row on the fly.
    """
    n = points.n
    if core.n != n:
        raise ValueError("core distances not aligned with points")
    if n == 1:
        return SpanningForest(
            n=1,
            u=np.empty(0, dtype=np.int64),
            v=np.empty(0, dtype=np.int64),
            w=np.empty(0, dtype=np.float64),
            component_count=1,
        )
    x = points.data.astype(np.float64)
    c = core.values

    def reach_row(i):
        row = np.sqrt(sqdist_exact(x[i : i + 1], x)[0])
        np.maximum(row, c, out=row)
        np.maximum(row, c[i], out=row)
        row[i] = np.inf
        return row

    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = reach_row(0)
    best_from = np.zeros(n, dtype=np.int64)
    out_u = np.empty(n - 1, dtype=np.int64)
    out_v = np.empty(n - 1, dtype=np.int64)
    out_w = np.empty(n - 1, dtype=np.float64)
    for step in range(n - 1):
        masked = np.where(in_tree, np.inf, best)
        m = masked.min()
        cands = np.flatnonzero(masked == m)
        if cands.size > 1:
            eu = np.minimum(best_from[cands], cands)
            ev = np.maximum(best_from[cands], cands)
            pick = int(cands[np.lexsort((ev, eu))[0]])
        else:
            pick = int(cands[0])
        src = int(best_from[pick])
        out_u[step] = min(src, pick)
        out_v[step] = max(src, pick)
        out_w[step] = best[pick]
        in_tree[pick] = True
        row = reach_row(pick)
        row[in_tree] = np.inf
        closer = row < best
        best[closer] = row[closer]
        best_from[closer] = pick
        tied = np.flatnonzero((row == best) & ~closer & ~in_tree)
        if tied.size:
            new_u = np.minimum(pick, tied)
            new_v = np.maximum(pick, tied)
            old_u = np.minimum(best_from[tied], tied)
            old_v = np.maximum(best_from[tied], tied)
            better = (new_u < old_u) | ((new_u == old_u) & (new_v < old_v))
            best_from[tied[better]] = pick
    final = np.lexsort((out_v, out_u, out_w))
    return SpanningForest(
        n=n,
        u=out_u[final],
        v=out_v[final],
        w=out_w[final],
        component_count=1,
    )


def attach_forest_root(forest):
    """Join a forest into one tree with infinite-weight synthetic edges.

    Every component's lowest-index vertex is linked to the lowest-index
    vertex of vertex 0's component; downstream those edges condense to
    density 0, so components stay independent top-level subtrees.
    """
    if forest.component_count == 1:
        return EdgeList(u=forest.u, v=forest.v, w=forest.w)
    n = forest.n
    uf = UnionFind(n)
    for a, b in zip(forest.u.tolist(), forest.v.tolist()):
        uf.union(a, b)
    lowest = {}
    for vtx in range(n):
        root = uf.find(vtx)
        if root not in lowest:
            lowest[root] = vtx
    anchors = sorted(low for low in lowest.values() if low != 0)
    synth_u = np.zeros(len(anchors), dtype=np.int64)
    synth_v = np.array(anchors, dtype=np.int64)
    synth_w = np.full(len(anchors), np.inf, dtype=np.float64)
    return EdgeList(
        u=np.concatenate([forest.u, synth_u]),
        v=np.concatenate([forest.v, synth_v]),
        w=np.concatenate([forest.w, synth_w]),
    )
