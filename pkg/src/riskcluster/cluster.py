"""End-to-end clustering orchestrator with per-stage timings."""

import time
from dataclasses import dataclass, field

import numpy as np

from .hierarchy import condense_tree, extract_clusters, single_linkage
from .knn import (
    brute_force_knn, default_nlist, default_nprobe, ivf_build, ivf_search)
from .mst import attach_forest_root, kruskal_forest
from .parallel import resolve_threads
from .reach import core_distances, mutual_reach_edges


@dataclass(frozen=True)
class ClusterParams:
    min_cluster_size: int
    min_samples: int | None = None
    k: int | None = None
    mode: str = "exact"
    nlist: int | None = None
    nprobe: int | None = None
    seed: int = 0
    allow_single_cluster: bool = False
    kernel: str = "exact"
    ivf_train_sample: int | None = None
    ivf_max_iter: int = 25

    def resolve(self, n):
        """Fill defaults against a dataset of n points."""
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")
        if self.mode not in ("exact", "ivf"):
            raise ValueError(f"unknown mode {self.mode!r}")
        min_samples = self.min_samples
        if min_samples is None:
            min_samples = self.min_cluster_size
        min_samples = min(min_samples, n - 1) if n > 1 else 1
        if min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        k = self.k if self.k is not None else min_samples
        k = min(k, n - 1) if n > 1 else 1
        if k < min_samples:
            raise ValueError(
                f"k={k} must be at least min_samples={min_samples}")
        nlist = self.nlist if self.nlist is not None else default_nlist(n)
        nlist = min(nlist, n)
        nprobe = (self.nprobe if self.nprobe is not None
                  else default_nprobe(nlist))
        nprobe = min(nprobe, nlist)
        return {
            "min_cluster_size": self.min_cluster_size,
            "min_samples": min_samples,
            "k": k,
            "mode": self.mode,
            "nlist": nlist,
            "nprobe": nprobe,
            "seed": self.seed,
            "allow_single_cluster": self.allow_single_cluster,
            "kernel": self.kernel,
            "ivf_train_sample": self.ivf_train_sample,
            "ivf_max_iter": self.ivf_max_iter,
        }


@dataclass(frozen=True)
class ClusterResult:
    assignment: object
    params: dict
    timings: dict
    component_count: int
    condensed: object = field(repr=False, default=None)

    @property
    def labels(self):
        return self.assignment.labels

    @property
    def strengths(self):
        return self.assignment.strengths

    @property
    def num_clusters(self):
        return self.assignment.num_clusters

    @property
    def noise_count(self):
        return int((self.assignment.labels == -1).sum())


def cluster_points(points, params, threads=None):
    """Run kNN -> reachability -> MST -> hierarchy -> stable clusters."""
    threads = resolve_threads(threads)
    n = points.n
    resolved = params.resolve(n)
    timings = {}
    t_start = time.perf_counter()

    if n == 1:
        condensed = condense_tree(
            single_linkage(_EMPTY_EDGES, 1), resolved["min_cluster_size"])
        assignment = extract_clusters(
            condensed, resolved["allow_single_cluster"])
        timings["total"] = time.perf_counter() - t_start
        return ClusterResult(
            assignment=assignment, params=resolved, timings=timings,
            component_count=1, condensed=condensed)

    t0 = time.perf_counter()
    if resolved["mode"] == "ivf":
        index = ivf_build(
            points, resolved["nlist"], seed=resolved["seed"],
            max_iter=resolved["ivf_max_iter"],
            train_sample=resolved["ivf_train_sample"])
        timings["quantizer"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        knn = ivf_search(
            index, points, resolved["k"], resolved["nprobe"],
            threads=threads, kernel=resolved["kernel"])
    else:
        timings["quantizer"] = 0.0
        knn = brute_force_knn(
            points, resolved["k"], threads=threads,
            kernel=resolved["kernel"])
    timings["knn"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    core = core_distances(knn, resolved["min_samples"])
    edges = mutual_reach_edges(knn, core)
    timings["reach"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    forest = kruskal_forest(edges, n, threads=threads)
    tree_edges = attach_forest_root(forest)
    timings["mst"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    slt = single_linkage(tree_edges, n)
    timings["hierarchy"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    condensed = condense_tree(slt, resolved["min_cluster_size"])
    timings["condense"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    assignment = extract_clusters(
        condensed, resolved["allow_single_cluster"])
    timings["extract"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start

    return ClusterResult(
        assignment=assignment,
        params=resolved,
        timings=timings,
        component_count=forest.component_count,
        condensed=condensed,
    )


class _EmptyEdges:
    u = np.empty(0, dtype=np.int64)
    v = np.empty(0, dtype=np.int64)
    w = np.empty(0, dtype=np.float64)

    def __len__(self):
        return 0


_EMPTY_EDGES = _EmptyEdges()
