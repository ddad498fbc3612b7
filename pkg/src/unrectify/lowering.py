"""Lower CPWL activations and max-pooling into relu-only graph fragments.

A hinge-form activation becomes one affine-relu layer whose rows evaluate
the individual hinges, followed by the linear combination of slopes. The
two-element maximum uses the algebraic identity

    max(x1, x2) = (x1 + x2) / 2 + |x1 - x2| / 2

realized as a three-row pre-matrix, a diagonal of (identity, relu, relu),
and the averaging row. Larger blocks recurse on the two-element fragment.
The identity diagonal entry is itself a single-piece CPWL activation
(relu(x) - relu(-x)), so fragments stay inside the arc-op vocabulary and
every activation arc they contain has slope bound one.
"""

from __future__ import annotations

import numpy as np

from .graph import DagNet, GraphBuilder
from .ops import (
    RELU,
    CpwlSpec,
    activation_affine,
    linear,
)

__all__ = ["lower_cpwl_to_relu", "lower_maxpool2", "lower_maxpool_n", "IDENTITY_CPWL"]

# exact identity: relu(x) - relu(0 - x) = x for every x
IDENTITY_CPWL = CpwlSpec(right=((1.0, 0.0),), left=((-1.0, 0.0),))


def lower_cpwl_to_relu(spec: CpwlSpec) -> DagNet:
    """One-input fragment computing the hinge sum with plain relus."""
    builder = GraphBuilder("in", 1)
    m = spec.m
    if m == 0:
        builder.add_arc("in", "out", linear(np.zeros((1, 1))))
        return builder.freeze()
    pre = np.zeros((m, 1))
    shift = np.zeros(m)
    combine = np.zeros((1, m))
    row = 0
    for r, a in spec.right:  # r * relu(x - a)
        pre[row, 0], shift[row], combine[0, row] = 1.0, -a, r
        row += 1
    for l, t in spec.left:  # l * relu(t - x)
        pre[row, 0], shift[row], combine[0, row] = -1.0, t, l
        row += 1
    builder.add_arc("in", "h", activation_affine(RELU, pre, shift))
    builder.add_arc("h", "out", linear(combine))
    return builder.freeze()


def _attach_max2(builder: GraphBuilder, src: str, tag: str) -> str:
    """Arcs computing max of the 2-dim node `src`; returns the output node."""
    cat = f"{tag}.s"
    out = f"{tag}.m"
    builder.add_arc(src, cat, activation_affine(IDENTITY_CPWL, [[1.0, 1.0]]), port=0)
    builder.add_arc(src, cat, activation_affine(RELU, [[1.0, -1.0]]), port=1)
    builder.add_arc(src, cat, activation_affine(RELU, [[-1.0, 1.0]]), port=2)
    builder.add_arc(cat, out, linear([[0.5, 0.5, 0.5]]))
    return out


def lower_maxpool2() -> DagNet:
    """Fragment mapping (x1, x2) to max(x1, x2), exactly."""
    builder = GraphBuilder("in", 2)
    _attach_max2(builder, "in", "p")
    return builder.freeze()


def _selector(rows, k: int) -> np.ndarray:
    sel = np.zeros((len(rows), k))
    for i, r in enumerate(rows):
        sel[i, r] = 1.0
    return sel


def _attach_max_n(builder: GraphBuilder, src: str, k: int, tag: str) -> str:
    if k == 1:
        return src
    if k == 2:
        return _attach_max2(builder, src, tag)
    # even blocks split in half; odd blocks peel the last element
    left = k // 2 if k % 2 == 0 else k - 1
    node_l = f"{tag}.l"
    node_r = f"{tag}.r"
    builder.add_arc(src, node_l, linear(_selector(range(left), k)))
    builder.add_arc(src, node_r, linear(_selector(range(left, k), k)))
    max_l = _attach_max_n(builder, node_l, left, f"{tag}.l")
    max_r = _attach_max_n(builder, node_r, k - left, f"{tag}.r")
    pair = f"{tag}.p"
    builder.add_arc(max_l, pair, linear(np.eye(1)), port=0)
    builder.add_arc(max_r, pair, linear(np.eye(1)), port=1)
    return _attach_max2(builder, pair, tag)


def lower_maxpool_n(k: int) -> DagNet:
    """Fragment computing the maximum of a k-vector, k >= 2."""
    if k < 2:
        raise ValueError("block size must be >= 2")
    builder = GraphBuilder("in", k)
    _attach_max_n(builder, "in", k, "p")
    return builder.freeze()
