"""Inductive assignment of new points to an existing clustering.

Each query takes the distance-weighted vote of its k nearest training
points. Noise-labeled training points vote too, so a query can be rejected
as noise. An exact coordinate match short-circuits to that training point's
label; vote ties go to the numerically smaller label (noise is -1, so noise
wins ties it participates in).
"""

from dataclasses import dataclass

import numpy as np

from .knn import _topk_rows, sqdist_exact
from .model import ClusterAssignment
from .parallel import run_chunked

_BLOCK_CELLS = 4_000_000


@dataclass(frozen=True)
class InductiveModel:
    train_points: object
    train_labels: object
    k_assign: int = 5

    def __post_init__(self):
        if self.train_labels.labels.shape[0] != self.train_points.n:
            raise ValueError("labels not aligned with training points")
        if self.k_assign < 1:
            raise ValueError("k_assign must be >= 1")


def assign_new_points(model, queries, threads=1):
    """Vote-based labels and strengths for a new PointSet."""
    train = model.train_points
    if queries.dim != train.dim:
        raise ValueError(
            f"query dim {queries.dim} != train dim {train.dim}")
    k = min(model.k_assign, train.n)
    base = train.data.astype(np.float64)
    qdata = queries.data.astype(np.float64)
    train_labels = model.train_labels.labels
    nq = queries.n
    labels = np.empty(nq, dtype=np.int64)
    strengths = np.empty(nq, dtype=np.float64)
    # labels shifted by +1 so noise (-1) lands in vote bucket 0
    shifted = (train_labels + 1).astype(np.int64)
    nbuckets = int(shifted.max()) + 1 if shifted.size else 1
    chunk = max(1, _BLOCK_CELLS // train.n)

    def work(start, stop):
        d2 = sqdist_exact(qdata[start:stop], base)
        vals, cols = _topk_rows(d2, k)
        dists = np.sqrt(vals)
        for r in range(stop - start):
            row_d = dists[r]
            row_i = cols[r]
            if row_d[0] == 0.0:
                # exact match: cols are (distance, id)-ordered, so index 0
                # is the smallest-index zero-distance training point
                lab = int(train_labels[row_i[0]])
                labels[start + r] = lab
                strengths[start + r] = 0.0 if lab == -1 else 1.0
                continue
            weights = 1.0 / row_d
            votes = np.bincount(
                shifted[row_i], weights=weights, minlength=nbuckets)
            winner = int(np.argmax(votes))
            lab = winner - 1
            labels[start + r] = lab
            total = votes.sum()
            strengths[start + r] = (
                0.0 if lab == -1 else float(votes[winner] / total))

    run_chunked(work, nq, threads, chunk)
    return ClusterAssignment(labels=labels, strengths=strengths)
