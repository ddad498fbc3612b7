"""Sampling-based partition analysis.

The linear-region partition at a node is probed with a sample matrix:
samples are grouped by their region signatures and the census reports how
many distinct regions were hit, how many samples share a region with at
least one other sample, and the largest distance between same-region
samples. Because a downstream node's signature extends an upstream one,
censuses taken along the graph can only get finer: more regions, fewer
co-resident samples, smaller intra-region spread.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .engine import forward_batch, signature_batch
from .errors import NotInSubgraph
from .graph import DagNet

__all__ = [
    "PartitionCensus",
    "partition_census",
    "refinement_check",
    "fusion_partition_bound",
]

# Exact pairwise scans are quadratic; regions holding more samples than
# this are measured on an evenly spaced subsample and flagged.
MAX_EXACT_GROUP = 10_000


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("UNRECTIFY_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class PartitionCensus:
    node: str
    sample_count: int
    region_count: int
    multi_point_count: int  # samples lying in a region with >= 2 samples
    max_intra_dist: float  # largest same-region pair distance
    subsampled: bool = False  # some group exceeded MAX_EXACT_GROUP


_HASH_MIX = np.uint64(0x9E3779B97F4A7C15)


def _group_inverse(sig_matrix: np.ndarray) -> tuple:
    """(group id per row, group count); rows equal iff signatures equal.

    Rows are compressed to 64-bit hashes for fast grouping; the full rows
    are then checked group by group, and exact lexicographic grouping
    takes over in the (vanishingly rare) event of a hash collision.
    """
    n, width = sig_matrix.shape
    if width == 0 or n == 0:
        return np.zeros(n, dtype=np.intp), min(1, n)
    h = np.zeros(n, dtype=np.uint64)
    cols = sig_matrix.astype(np.uint64, copy=False)
    for j in range(width):
        h = (h ^ cols[:, j]) * _HASH_MIX
    _, inverse, counts = np.unique(h, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()

    # collision verification: every row must equal the head of its group
    order = np.argsort(inverse, kind="stable")
    starts = np.zeros(len(counts), dtype=np.intp)
    np.cumsum(counts[:-1], out=starts[1:])
    heads = np.repeat(order[starts], counts)
    if not (sig_matrix[order] == sig_matrix[heads]).all():
        _, inverse, counts = np.unique(
            sig_matrix, axis=0, return_inverse=True, return_counts=True
        )
        inverse = inverse.ravel()
    return inverse, len(counts)


def _subsample(idx: np.ndarray, cap: int) -> np.ndarray:
    step = np.linspace(0, idx.size - 1, cap).round().astype(np.intp)
    return idx[np.unique(step)]


def partition_census(
    net: DagNet,
    a: str,
    samples,
    *,
    max_exact_group: int = MAX_EXACT_GROUP,
) -> PartitionCensus:
    """Census of the region partition at node a over the sample rows."""
    xs = np.asarray(samples, dtype=np.float64)
    sigs = signature_batch(net, a, xs)
    inverse, region_count = _group_inverse(sigs)

    order = np.argsort(inverse, kind="stable")
    boundaries = np.flatnonzero(np.diff(inverse[order])) + 1
    groups = np.split(order, boundaries)

    multi = sum(g.size for g in groups if g.size >= 2)
    subsampled = False
    tasks = []
    for g in groups:
        if g.size < 2:
            continue
        if g.size > max_exact_group:
            g = _subsample(g, max_exact_group)
            subsampled = True
        tasks.append(xs[g])

    workers = thread_count()
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            dists = list(pool.map(_kernels.max_pairwise_dist, tasks))
    else:
        dists = [_kernels.max_pairwise_dist(t) for t in tasks]
    max_dist = max(dists, default=0.0)

    return PartitionCensus(
        node=a,
        sample_count=xs.shape[0],
        region_count=region_count,
        multi_point_count=int(multi),
        max_intra_dist=float(max_dist),
        subsampled=subsampled,
    )


def refinement_check(net: DagNet, a: str, b: str, samples, *, trace=None) -> int:
    """Sample pairs sharing a region at `a` but split at `b`; always 0.

    Requires b to lie in the computable sub-graph of a, which is exactly
    when the partition at a refines the partition at b. A forward trace of
    the same samples may be passed in to amortize evaluation over many
    node pairs.
    """
    sub = net.computable_subgraph(a)
    if b not in sub.nodes:
        raise NotInSubgraph(f"{b!r} is not in the computable sub-graph of {a!r}")
    xs = np.asarray(samples, dtype=np.float64)
    if xs.shape[0] < 2:
        return 0
    if trace is None:
        trace = forward_batch(net, xs)
    inv_a, _ = _group_inverse(signature_batch(net, a, xs, trace=trace))
    inv_b, _ = _group_inverse(signature_batch(net, b, xs, trace=trace))

    def pair_total(counts: np.ndarray) -> int:
        return int(np.sum(counts * (counts - 1) // 2))

    _, counts_a = np.unique(inv_a, return_counts=True)
    joint = inv_a.astype(np.int64) * (inv_b.max() + 1) + inv_b
    _, counts_joint = np.unique(joint, return_counts=True)
    return pair_total(counts_a) - pair_total(counts_joint)


def fusion_partition_bound(channel_region_counts: Sequence[int]) -> int:
    """Product bound on the fused region count of independent channels."""
    out = 1
    for n in channel_region_counts:
        if n < 1:
            raise ValueError("region counts must be >= 1")
        out *= int(n)
    return out
