"""Forward evaluation, region signatures, and frozen region-wise affine maps.

Evaluating a network visits nodes in topological order; each arc applies
its op to the source value and a multi-input node concatenates arc outputs
in port order. Activation arcs additionally record their pattern, and the
stack of patterns over the computable sub-graph of a node is the region
signature at that node: two inputs share a signature exactly when every
activation picked the same piece for both along every path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import (
    DimMismatch,
    LevelOutOfRange,
    NonFiniteValue,
    TransformInSubgraph,
    TransformPresent,
)
from .graph import DagNet
from .rng import fnv1a64

__all__ = [
    "Trace",
    "RegionSignature",
    "forward",
    "forward_batch",
    "signature",
    "signature_batch",
    "level_output",
    "region_affine",
]


@dataclass(frozen=True)
class Trace:
    """Everything a single forward pass produced."""

    node_values: Dict[str, np.ndarray]
    arc_patterns: Dict[int, np.ndarray]  # arc index -> integer pattern vector
    output: np.ndarray


@dataclass(frozen=True)
class RegionSignature:
    """Stacked activation patterns over a computable sub-graph.

    entries: ((node, arc_index, pattern tuple), ...) in topological order.
    Signatures at upstream nodes are sub-tuples of downstream ones, which
    is what makes downstream partitions refinements.
    """

    node: str
    entries: Tuple[Tuple[str, int, Tuple[int, ...]], ...]

    def hash64(self) -> int:
        parts = []
        for node, idx, pattern in self.entries:
            parts.append(node.encode())
            parts.append(idx.to_bytes(4, "little"))
            parts.append(np.asarray(pattern, dtype=np.int64).tobytes())
        return fnv1a64(b"|".join(parts))

    def hex(self) -> str:
        return f"{self.hash64():016x}"


def _eval(net: DagNet, x: np.ndarray, batched: bool) -> Trace:
    if batched:
        if x.ndim != 2 or x.shape[1] != net.input_dim:
            raise DimMismatch(f"expected (n, {net.input_dim}) inputs, got {x.shape}")
    elif x.shape != (net.input_dim,):
        raise DimMismatch(f"expected input of dim {net.input_dim}, got {x.shape}")

    values: Dict[str, np.ndarray] = {net.input_node: x}
    patterns: Dict[int, np.ndarray] = {}
    for node in net.topo:
        if node == net.input_node:
            continue
        pieces = []
        for arc in net.in_arcs[node]:
            out, pattern = arc.op.apply(values[arc.src])
            if pattern is not None:
                patterns[arc.index] = pattern
            pieces.append(np.atleast_1d(out) if not batched else out)
        value = pieces[0] if len(pieces) == 1 else np.concatenate(pieces, axis=-1)
        if not np.isfinite(value).all():
            raise NonFiniteValue(f"non-finite value at node {node!r}")
        values[node] = value
    return Trace(values, patterns, values[net.output_node])


def forward(net: DagNet, x) -> Trace:
    """Evaluate the network on a single input vector."""
    return _eval(net, np.asarray(x, dtype=np.float64), batched=False)


def forward_batch(net: DagNet, xs) -> Trace:
    """Evaluate on a batch; rows are samples, node values are (n, dim)."""
    return _eval(net, np.asarray(xs, dtype=np.float64), batched=True)


def _signature_arcs(net: DagNet, a: str) -> List:
    """Activation arcs of the computable sub-graph at a, topological order.

    Raises if a transform arc lies in the sub-graph: partitions are only
    defined for piecewise-linear computations.
    """
    sub = net.computable_subgraph(a)
    position = {n: i for i, n in enumerate(net.topo)}
    arcs = sorted(sub.arcs, key=lambda arc: (position[arc.src], arc.index))
    for arc in arcs:
        if arc.op.is_transform:
            raise TransformInSubgraph(
                f"arc {arc.src}->{arc.dst} carries a transform; no region semantics"
            )
    return [arc for arc in arcs if arc.op.has_pattern]


def signature(net: DagNet, a: str, x) -> RegionSignature:
    """Region signature of x at node a."""
    trace = forward(net, x)
    entries = tuple(
        (arc.dst, arc.index, tuple(int(v) for v in trace.arc_patterns[arc.index]))
        for arc in _signature_arcs(net, a)
    )
    return RegionSignature(a, entries)


def signature_batch(net: DagNet, a: str, xs, trace: Optional[Trace] = None) -> np.ndarray:
    """Signatures for a whole sample matrix as one (n, total_len) int array.

    Rows compare equal exactly when the full signatures match, so the array
    supports bulk grouping without building per-sample objects.
    """
    arcs = _signature_arcs(net, a)
    if trace is None:
        trace = forward_batch(net, xs)
    if not arcs:
        n = trace.output.shape[0]
        return np.zeros((n, 0), dtype=np.int64)
    return np.concatenate([trace.arc_patterns[arc.index] for arc in arcs], axis=1)


def level_output(net: DagNet, n: int, x) -> np.ndarray:
    """Stacked outputs of all depth-n nodes (sorted by id); depth 0 is x."""
    lm = net.l_values()
    if not 0 <= n <= lm.L:
        raise LevelOutOfRange(f"level {n} outside 0..{lm.L}")
    trace = forward(net, x)
    return np.concatenate([trace.node_values[node] for node in lm.levels[n]])


def region_affine(net: DagNet, x) -> Tuple[np.ndarray, np.ndarray]:
    """Exact affine map (A, b) of the region containing x.

    Every y with signature(y) == signature(x) satisfies forward(y) = A y + b.
    Patterns are frozen from the forward pass at x, then each arc pushes the
    input-space affine map through its op. Requires a transform-free net.
    """
    if any(arc.op.is_transform for arc in net.arcs):
        raise TransformPresent("region affine maps undefined with transform arcs")
    x = np.asarray(x, dtype=np.float64)
    trace = forward(net, x)
    d = net.input_dim
    maps: Dict[str, Tuple[np.ndarray, np.ndarray]] = {
        net.input_node: (np.eye(d), np.zeros(d))
    }
    for node in net.topo:
        if node == net.input_node:
            continue
        pieces = []
        for arc in net.in_arcs[node]:
            a_in, b_in = maps[arc.src]
            pattern = trace.arc_patterns.get(arc.index)
            pieces.append(arc.op.frozen_affine(pattern, a_in, b_in))
        a_mat = np.concatenate([p[0] for p in pieces], axis=0)
        b_vec = np.concatenate([np.atleast_1d(p[1]) for p in pieces])
        maps[node] = (a_mat, b_vec)
    return maps[net.output_node]
