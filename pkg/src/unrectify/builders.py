"""Constructors for the module zoo and the experiment networks.

Weights are always drawn from the seedable generator with one substream
per matrix, so identical arguments give byte-identical graphs and the
draw for one layer does not depend on any other layer.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

from .errors import DimMismatch
from .graph import DagNet, GraphBuilder
from .ops import (
    MAXLU2,
    RELU,
    Transform,
    activation,
    activation_affine,
    affine,
    identity,
    linear,
    transform,
)
from .rng import standard_normal

__all__ = [
    "build_series",
    "build_fusion",
    "build_fusion_stack",
    "fusion_stack_channels",
    "build_resnet_block",
    "build_attention_toy",
    "build_lenet_shape",
]


def build_series(layers: Sequence[Tuple]) -> DagNet:
    """Chain of affine layers, each optionally followed by an activation.

    layers: sequence of (W, b, act) with act None for a bare affine layer.
    An empty sequence gives the single-node identity network.
    """
    if not layers:
        return GraphBuilder("n00", 1).freeze()
    w0 = np.asarray(layers[0][0])
    builder = GraphBuilder("n00", w0.shape[1])
    for i, (w, b, act) in enumerate(layers):
        op = activation_affine(act, w, b) if act is not None else affine(w, b)
        builder.add_arc(f"n{i:02d}", f"n{i + 1:02d}", op)
    return builder.freeze()


def _splice(builder: GraphBuilder, channel: DagNet, input_node: str, prefix: str) -> str:
    """Copy a channel net into `builder`, its input merged with input_node.

    Returns the (renamed) channel output node.
    """
    rename = {
        node: input_node if node == channel.input_node else f"{prefix}{node}"
        for node in channel.nodes
    }
    for arc in channel.arcs:
        builder.add_arc(rename[arc.src], rename[arc.dst], arc.op, arc.port)
    return rename[channel.output_node]


def build_fusion(channels: Sequence[DagNet], fuse: np.ndarray) -> DagNet:
    """Channels in parallel, concatenated, then fused by one linear map.

    Channel output nodes stay distinct and feed the concatenation through
    identity-matrix linear arcs, so each channel can be inspected (and
    rescaled) on its own.
    """
    if not channels:
        raise ValueError("need at least one channel")
    dim = channels[0].input_dim
    if any(ch.input_dim != dim for ch in channels):
        raise DimMismatch("channels must share the input dimension")
    fuse = np.asarray(fuse, dtype=np.float64)
    total = sum(ch.node_dim[ch.output_node] for ch in channels)
    if fuse.shape[1] != total:
        raise DimMismatch(f"fusion map expects {fuse.shape[1]} inputs, channels give {total}")
    builder = GraphBuilder("in", dim)
    for i, channel in enumerate(channels):
        out = _splice(builder, channel, "in", f"ch{i}.")
        width = channel.node_dim[channel.output_node]
        builder.add_arc(out, "cat", linear(np.eye(width)), port=i)
    builder.add_arc("cat", "out", linear(fuse))
    return builder.freeze()


def build_fusion_stack(layers: int, dim: int, seed: int) -> DagNet:
    """Stack of two-channel relu fusion layers with standard-normal weights.

    Layer j reads the previous fused output x_{j-1} and computes

        x_j = [I I] [ t_j ; b_j ],   t_j = relu(W1 x + c1),  b_j = relu(W2 x + c2)

    with one graph node per channel so censuses can compare top, bottom,
    and fused partitions layer by layer.
    """
    if layers < 1 or dim < 1:
        raise ValueError("layers and dim must be >= 1")
    builder = GraphBuilder("x00", dim)
    fuse = np.hstack([np.eye(dim), np.eye(dim)])
    for j in range(1, layers + 1):
        w1 = standard_normal((dim, dim), seed, f"layer{j}/top/w")
        c1 = standard_normal((dim,), seed, f"layer{j}/top/b")
        w2 = standard_normal((dim, dim), seed, f"layer{j}/bot/w")
        c2 = standard_normal((dim,), seed, f"layer{j}/bot/b")
        prev = f"x{j - 1:02d}"
        builder.add_arc(prev, f"t{j:02d}", activation_affine(RELU, w1, c1))
        builder.add_arc(prev, f"b{j:02d}", activation_affine(RELU, w2, c2))
        builder.add_arc(f"t{j:02d}", f"c{j:02d}", linear(np.eye(dim)), port=0)
        builder.add_arc(f"b{j:02d}", f"c{j:02d}", linear(np.eye(dim)), port=1)
        builder.add_arc(f"c{j:02d}", f"x{j:02d}", linear(fuse))
    return builder.freeze()


def fusion_stack_channels(layers: int) -> List[Tuple[int, str, str, str]]:
    """(layer, top node, bottom node, fused node) ids for a fusion stack."""
    return [(j, f"t{j:02d}", f"b{j:02d}", f"x{j:02d}") for j in range(1, layers + 1)]


def build_resnet_block(w1, w2, b1=None, b2=None) -> DagNet:
    """Residual block relu(x - M2 relu(M1 x)) with an identity direct link."""
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if w2.shape[1] != w1.shape[0] or w2.shape[0] != w1.shape[1]:
        raise DimMismatch(f"need square composition, got {w2.shape} o {w1.shape}")
    n = w1.shape[1]
    b1 = np.zeros(w1.shape[0]) if b1 is None else np.asarray(b1, dtype=np.float64)
    b2 = np.zeros(n) if b2 is None else np.asarray(b2, dtype=np.float64)
    builder = GraphBuilder("in", n)
    builder.add_arc("in", "h", activation_affine(RELU, w1, b1))
    builder.add_arc("in", "cat", identity(), port=0)
    builder.add_arc("h", "cat", affine(-w2, -b2), port=1)
    builder.add_arc("cat", "out", activation_affine(RELU, np.hstack([np.eye(n), np.eye(n)])))
    return builder.freeze()


def _block_diag(mat: np.ndarray, copies: int) -> np.ndarray:
    r, c = mat.shape
    out = np.zeros((r * copies, c * copies))
    for i in range(copies):
        out[i * r : (i + 1) * r, i * c : (i + 1) * c] = mat
    return out


def build_attention_toy(wq, wk, wv, lam: float = 1.0, seq_len: int = 4) -> DagNet:
    """Single-head self-attention on seq_len tokens of fixed width.

    Query/key/value maps are linear arcs; the score and mixing stages are
    the two bilinear transform ops, and the score-to-weight step is the
    softmax transform. Token i's output is the probability-weighted sum of
    the value vectors, so it lies in their convex hull.
    """
    wq = np.asarray(wq, dtype=np.float64)
    wk = np.asarray(wk, dtype=np.float64)
    wv = np.asarray(wv, dtype=np.float64)
    k = wq.shape[0]
    if wq.shape != (k, k) or wk.shape != (k, k) or wv.shape != (k, k):
        raise DimMismatch("head matrices must be square and equally sized")
    builder = GraphBuilder("in", seq_len * k)
    builder.add_arc("in", "keys", linear(_block_diag(wk, seq_len)))
    builder.add_arc("in", "vals", linear(_block_diag(wv, seq_len)))
    scores = Transform("attn_scores", seq=seq_len, width=k)
    mix = Transform("attn_mix", seq=seq_len, width=k)
    for i in range(seq_len):
        token = np.zeros((k, seq_len * k))
        token[:, i * k : (i + 1) * k] = wq
        builder.add_arc("in", f"q{i}", linear(token))
        builder.add_arc(f"q{i}", f"qk{i}", linear(np.eye(k)), port=0)
        builder.add_arc("keys", f"qk{i}", linear(np.eye(seq_len * k)), port=1)
        builder.add_arc(f"qk{i}", f"s{i}", transform(scores))
        builder.add_arc(f"s{i}", f"p{i}", transform(Transform("softmax", lam=lam)))
        builder.add_arc(f"p{i}", f"pv{i}", linear(np.eye(seq_len)), port=0)
        builder.add_arc("vals", f"pv{i}", linear(np.eye(seq_len * k)), port=1)
        builder.add_arc(f"pv{i}", f"out", transform(mix), port=i)
    return builder.freeze()


def _conv_matrix(height: int, width: int, kernel: np.ndarray, pad: int) -> np.ndarray:
    """Dense affine materialization of a stride-1 2-d convolution.

    kernel has shape (in_channels, kh, kw); the input is the row-major
    concatenation of the channel images; output is row-major.
    """
    in_ch, kh, kw = kernel.shape
    out_h = height - kh + 2 * pad + 1
    out_w = width - kw + 2 * pad + 1
    mat = np.zeros((out_h * out_w, in_ch * height * width))
    for r in range(out_h):
        for c in range(out_w):
            row = r * out_w + c
            for ch in range(in_ch):
                for i in range(kh):
                    rr = r + i - pad
                    if not 0 <= rr < height:
                        continue
                    for j in range(kw):
                        cc = c + j - pad
                        if 0 <= cc < width:
                            mat[row, ch * height * width + rr * width + cc] = kernel[ch, i, j]
    return mat


def _row_pair_permutation(height: int, width: int) -> np.ndarray:
    """Reorder a row-major (height, width) image so vertically adjacent
    entries become consecutive pairs; height must be even."""
    perm = np.zeros((height * width, height * width))
    slot = 0
    for k in range(height // 2):
        for c in range(width):
            perm[slot, (2 * k) * width + c] = 1.0
            perm[slot + 1, (2 * k + 1) * width + c] = 1.0
            slot += 2
    return perm


def _attach_pool(builder: GraphBuilder, src: str, tag: str, height: int, width: int) -> str:
    """Two maxlu stages pooling 2x2 windows of a row-major image.

    Row-major layout already places horizontal neighbours next to each
    other, so the first stage needs no permutation; the second stage
    pairs rows first.
    """
    builder.add_arc(src, f"{tag}h", activation(MAXLU2))
    perm = _row_pair_permutation(height, width // 2)
    builder.add_arc(f"{tag}h", f"{tag}v", activation_affine(MAXLU2, perm))
    return f"{tag}v"


def build_lenet_shape(seed: int) -> DagNet:
    """Graph with the classic digit-recognizer topology and random weights.

    28x28 input; six parallel 5x5 same-padding conv channels with 2x2
    maxlu pooling; concatenation; sixteen 5x5 valid conv channels with
    pooling; concatenation to a 400-vector; relu layers 400 -> 120 -> 84
    and a final affine map to 10 scores.
    """
    builder = GraphBuilder("img", 28 * 28)
    for c in range(6):
        kernel = standard_normal((1, 5, 5), seed, f"conv1/{c}/k")
        bias = float(standard_normal((1,), seed, f"conv1/{c}/b")[0])
        mat = _conv_matrix(28, 28, kernel, pad=2)
        builder.add_arc("img", f"c1.{c}", affine(mat, np.full(mat.shape[0], bias)))
        pooled = _attach_pool(builder, f"c1.{c}", f"p1.{c}", 28, 28)
        builder.add_arc(pooled, "cat1", linear(np.eye(14 * 14)), port=c)
    for c in range(16):
        kernel = standard_normal((6, 5, 5), seed, f"conv2/{c}/k")
        bias = float(standard_normal((1,), seed, f"conv2/{c}/b")[0])
        mat = _conv_matrix(14, 14, kernel, pad=0)
        builder.add_arc("cat1", f"c2.{c:02d}", affine(mat, np.full(mat.shape[0], bias)))
        pooled = _attach_pool(builder, f"c2.{c:02d}", f"p2.{c:02d}", 10, 10)
        builder.add_arc(pooled, "cat2", linear(np.eye(5 * 5)), port=c)
    w1 = standard_normal((120, 400), seed, "fc1/w")
    b1 = standard_normal((120,), seed, "fc1/b")
    w2 = standard_normal((84, 120), seed, "fc2/w")
    b2 = standard_normal((84,), seed, "fc2/b")
    w3 = standard_normal((10, 84), seed, "fc3/w")
    b3 = standard_normal((10,), seed, "fc3/b")
    builder.add_arc("cat2", "fc1", activation_affine(RELU, w1, b1))
    builder.add_arc("fc1", "fc2", activation_affine(RELU, w2, b2))
    builder.add_arc("fc2", "scores", affine(w3, b3))
    return builder.freeze()
