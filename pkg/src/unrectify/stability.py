"""Lipschitz stability analysis.

The certificate machinery works with per-level weight sums: for depth
level n,

    s_n = d * sum over arcs into level-n nodes of ||W_arc||

where d is the largest frozen-slope / Lipschitz bound among the network's
arc non-linearities and weight-free arcs count as norm one. If s_n <= 1
from some level m onward, the network's output cannot amplify input
perturbations beyond the largest bound accumulated before m, no matter
which linear region the inputs fall in. The level recursion

    C(0) = 1,   C(n) = d * sum of ||W_arc|| * C(level(src))

gives a region-independent upper bound on the network's Lipschitz
constant; it is never claimed tight, and the empirical max gain over
sample pairs is reported next to it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .engine import forward_batch
from .errors import (
    DegeneratePair,
    LevelOutOfRange,
    NonFiniteValue,
    ShapeError,
    UnboundedTransform,
    Unscalable,
)
from .graph import Arc, DagNet, GraphBuilder
from .ops import ArcOp, uniform_bound
from .rng import standard_normal

__all__ = [
    "spectral_norm",
    "frobenius_norm",
    "net_uniform_bound",
    "level_weight_sum",
    "lipschitz_upper_bound",
    "StabilityReport",
    "stability_certificate",
    "scale_to_stability",
    "empirical_max_gain",
    "empirical_level_gains",
    "resnet_stability_check",
]

NORMS = ("spectral", "frobenius")

# Safety margin applied when rescaling a level to its target; keeps the
# recomputed sums at or below one despite floating-point norm round-off.
_SCALE_MARGIN = 1e-9


def spectral_norm(w, tol: float = 1e-9, max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on W^T W.

    The start vector is drawn from a fixed seed, so repeated calls give
    identical results. Stops when the estimate's relative change drops
    below tol.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {w.shape}")
    if not np.isfinite(w).all():
        raise NonFiniteValue("matrix has non-finite entries")
    if not w.size or not np.any(w):
        return 0.0
    v = standard_normal((w.shape[1],), seed=0x5EED, label=f"specnorm:{w.shape}")
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        u = w.T @ (w @ v)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            # start vector happened to lie in the null space; nudge it
            v = v + 1.0 / np.sqrt(v.size)
            v /= np.linalg.norm(v)
            continue
        v = u / nu
        prev, sigma = sigma, np.sqrt(nu)  # ||W^T W v|| -> sigma_max^2
        if abs(sigma - prev) <= tol * max(sigma, 1e-300):
            break
    return float(sigma)


def frobenius_norm(w) -> float:
    w = np.asarray(w, dtype=np.float64)
    return float(np.sqrt(np.sum(w * w)))


def _matrix_norm(w: np.ndarray, norm: str) -> float:
    if norm == "spectral":
        return spectral_norm(w)
    if norm == "frobenius":
        return frobenius_norm(w)
    raise ValueError(f"norm must be one of {NORMS}, got {norm!r}")


def _arc_norm(arc: Arc, norm: str) -> float:
    """Norm of the linear part an arc applies; weight-free arcs count 1."""
    if arc.op.w is None:
        return 1.0
    return _matrix_norm(arc.op.w, norm)


def net_uniform_bound(net: DagNet) -> float:
    """Largest per-arc non-linearity bound; raises if any arc is unbounded."""
    d = 1.0
    for arc in net.arcs:
        bound = uniform_bound(arc.op)
        if bound is None:
            raise UnboundedTransform(
                f"arc {arc.src}->{arc.dst} has no declared Lipschitz bound"
            )
        d = max(d, bound)
    return d


def _arcs_by_level(net: DagNet) -> Dict[int, List[Arc]]:
    lm = net.l_values()
    per_level: Dict[int, List[Arc]] = {n: [] for n in range(1, lm.L + 1)}
    for arc in net.arcs:
        per_level[lm.l[arc.dst]].append(arc)
    return per_level


def level_weight_sum(net: DagNet, n: int, norm: str = "spectral") -> float:
    """d * sum of arc norms over arcs entering depth-n nodes."""
    lm = net.l_values()
    if not 1 <= n <= lm.L:
        raise LevelOutOfRange(f"level {n} outside 1..{lm.L}")
    d = net_uniform_bound(net)
    return d * sum(_arc_norm(arc, norm) for arc in _arcs_by_level(net)[n])


def lipschitz_upper_bound(net: DagNet, norm: str = "spectral") -> float:
    """Region-independent Lipschitz upper bound from the level recursion."""
    lm = net.l_values()
    d = net_uniform_bound(net)
    c = {0: 1.0}
    per_level = _arcs_by_level(net)
    for n in range(1, lm.L + 1):
        c[n] = d * sum(_arc_norm(arc, norm) * c[lm.l[arc.src]] for arc in per_level[n])
    return c[lm.L]


@dataclass(frozen=True)
class StabilityReport:
    d: float
    norm: str
    sums: Tuple[float, ...]  # s_1 .. s_L
    m: Optional[int]  # first level from which every sum is <= 1
    certified: bool
    lipschitz_bound: float
    empirical_gain: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "norm": self.norm,
            "level_sums": list(self.sums),
            "m": self.m,
            "certified": self.certified,
            "lipschitz_bound": self.lipschitz_bound,
            "empirical_gain": self.empirical_gain,
        }


def stability_certificate(net: DagNet, norm: str = "spectral") -> StabilityReport:
    """Per-level sums, the first all-below-one level m, and the bound."""
    lm = net.l_values()
    d = net_uniform_bound(net)
    per_level = _arcs_by_level(net)
    sums = tuple(
        d * sum(_arc_norm(arc, norm) for arc in per_level[n]) for n in range(1, lm.L + 1)
    )
    m = 1 if not sums else None  # an arc-free net is trivially non-expansive
    for first in range(1, lm.L + 1):
        if all(s <= 1.0 for s in sums[first - 1 :]):
            m = first
            break
    return StabilityReport(
        d=d,
        norm=norm,
        sums=sums,
        m=m,
        certified=m is not None,
        lipschitz_bound=lipschitz_upper_bound(net, norm),
    )


def scale_to_stability(net: DagNet, norm: str = "spectral") -> DagNet:
    """Rescale weights so every level sum is at most one.

    Each offending level gets a single factor applied to the linear parts
    of its weighted arcs; biases are untouched. Weight-free arcs (identity,
    bare activations) contribute a fixed d each and cannot be scaled: when
    those alone reach one on a level that also carries weighted arcs, no
    positive scaling works and Unscalable is raised.
    """
    lm = net.l_values()
    d = net_uniform_bound(net)
    per_level = _arcs_by_level(net)
    factors: Dict[int, float] = {}
    for n in range(1, lm.L + 1):
        fixed = d * sum(1.0 for arc in per_level[n] if arc.op.w is None)
        scalable = d * sum(
            _arc_norm(arc, norm) for arc in per_level[n] if arc.op.w is not None
        )
        if fixed + scalable <= 1.0:
            continue
        if scalable == 0.0 or fixed >= 1.0:
            raise Unscalable(
                f"level {n}: weight-free arcs contribute {fixed}, "
                f"weighted arcs {scalable}; sum cannot reach 1"
            )
        factors[n] = (1.0 - fixed) / scalable * (1.0 - _SCALE_MARGIN)

    if not factors:
        return net
    builder = GraphBuilder(net.input_node, net.input_dim)
    for arc in net.arcs:
        op = arc.op
        factor = factors.get(lm.l[arc.dst])
        if factor is not None and op.w is not None:
            op = ArcOp(op.kind, w=factor * op.w, b=op.b, act=op.act, tr=op.tr, dim=op.dim)
        builder.add_arc(arc.src, arc.dst, op, arc.port)
    return builder.freeze()


def _level_stack(trace, lm, n: int) -> np.ndarray:
    return np.concatenate([trace.node_values[node] for node in lm.levels[n]], axis=1)


def _pairs_to_arrays(pairs) -> Tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    for x, y in pairs:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if np.array_equal(x, y):
            raise DegeneratePair("pair with x == y has no gain ratio")
        xs.append(x)
        ys.append(y)
    return np.asarray(xs), np.asarray(ys)


def empirical_max_gain(net: DagNet, pairs) -> float:
    """max over pairs of ||N(x) - N(y)|| / ||x - y||."""
    xs, ys = _pairs_to_arrays(pairs)
    out_x = forward_batch(net, xs).output
    out_y = forward_batch(net, ys).output
    num = np.linalg.norm(out_x - out_y, axis=1)
    den = np.linalg.norm(xs - ys, axis=1)
    return float(np.max(num / den))


def empirical_level_gains(net: DagNet, pairs) -> Dict[int, float]:
    """Per-level variant: gain of the stacked depth-n outputs, for every n."""
    xs, ys = _pairs_to_arrays(pairs)
    lm = net.l_values()
    trace_x = forward_batch(net, xs)
    trace_y = forward_batch(net, ys)
    den = np.linalg.norm(xs - ys, axis=1)
    gains = {}
    for n in range(0, lm.L + 1):
        sx = _level_stack(trace_x, lm, n)
        sy = _level_stack(trace_y, lm, n)
        gains[n] = float(np.max(np.linalg.norm(sx - sy, axis=1) / den))
    return gains


def all_pairs_level_gains(
    net: DagNet, samples, levels: Sequence[int]
) -> Dict[int, float]:
    """Max gain over all unordered sample pairs at the given levels.

    Runs one batched forward pass and one pairwise scan per level; pairs
    with duplicate inputs are skipped.
    """
    xs = np.asarray(samples, dtype=np.float64)
    lm = net.l_values()
    trace = forward_batch(net, xs)
    out = {}
    for n in levels:
        if not 0 <= n <= lm.L:
            raise LevelOutOfRange(f"level {n} outside 0..{lm.L}")
        out[n] = float(_kernels.max_pair_gain(_level_stack(trace, lm, n), xs))
    return out


def resnet_stability_check(w1, w2) -> bool:
    """Whether the residual map I - W2 W1 is non-expansive in operator norm."""
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if w1.ndim != 2 or w2.ndim != 2 or w2.shape[1] != w1.shape[0]:
        raise ShapeError(f"cannot compose {w2.shape} with {w1.shape}")
    prod = w2 @ w1
    if prod.shape[0] != prod.shape[1]:
        raise ShapeError(f"W2 W1 must be square, got {prod.shape}")
    return spectral_norm(np.eye(prod.shape[0]) - prod) <= 1.0 + 1e-9
