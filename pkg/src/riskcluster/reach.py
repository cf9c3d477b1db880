"""Density transform: core distances and mutual reachability edges.

Core distance is the distance to the min_samples-th nearest OTHER point (self
never counts). Mutual reachability of a kNN pair (i, j) is
max(core_i, core_j, d_ij); both directions of a pair carry bitwise-identical
weights, so deduplication keeps an arbitrary representative.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CoreDistances:
    values: np.ndarray

    @property
    def n(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class EdgeList:
    """Undirected weighted edges with u < v and no duplicate pairs."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        if not (self.u.shape == self.v.shape == self.w.shape):
            raise ValueError("edge arrays must align")
        if self.u.size and not (self.u < self.v).all():
            raise ValueError("edges must satisfy u < v")
        # +inf is legal (synthetic forest-join edges); negatives and NaN not
        if self.w.size and not (self.w >= 0).all():
            raise ValueError("edge weights must be nonnegative")

    def __len__(self):
        return self.u.shape[0]


def core_distances(knn, min_samples):
    """min_samples-th neighbor distance per point, straight off the graph."""
    if not 1 <= min_samples <= knn.k:
        raise ValueError(
            f"min_samples must be in [1, k={knn.k}], got {min_samples}")
    return CoreDistances(values=knn.neighbor_dists[:, min_samples - 1].copy())


def mutual_reach_edges(knn, core):
    """One undirected edge per kNN pair, weighted by mutual reachability."""
    n, k = knn.neighbor_ids.shape
    if core.n != n:
        raise ValueError("core distances not aligned with the kNN graph")
    src = np.repeat(np.arange(n, dtype=np.int64), k)
    dst = knn.neighbor_ids.ravel().astype(np.int64)
    d = knn.neighbor_dists.ravel()
    c = core.values
    w = np.maximum(d, np.maximum(c[src], c[dst]))
    u = np.minimum(src, dst)
    v = np.maximum(src, dst)
    # first occurrence per undirected pair; weights agree across directions
    _, first = np.unique(u * n + v, return_index=True)
    return EdgeList(u=u[first], v=v[first], w=w[first])
