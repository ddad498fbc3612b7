"""Arc operations: the element vocabulary attached to graph arcs.

An arc carries one of: identity, linear map, affine map, a point-wise
continuous piecewise-linear (CPWL) activation, an activation composed with
an affine map, a non-linear transform, or a transform composed with an
affine map.

Every CPWL activation is stored in the two-sided hinge form

    rho(x) = sum_i r_i * relu(x - a_i) + sum_j l_j * relu(t_j - x)

so that freezing the set of active hinges at a point turns the activation
into an explicit affine function of its input. The integer recording which
hinges are active is the activation pattern; stacking patterns over a graph
identifies the linear region an input lies in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DimMismatch

__all__ = [
    "CpwlSpec",
    "RELU",
    "MAXLU2",
    "Transform",
    "ArcOp",
    "identity",
    "linear",
    "affine",
    "activation",
    "activation_affine",
    "transform",
    "transform_affine",
    "cpwl_eval",
    "unrectify_diag",
    "activation_apply",
    "transform_apply",
    "uniform_bound",
]

# Bitmask patterns index hinge terms; int64 leaves headroom for the sign bit.
MAX_TERMS = 60


def _as_readonly(a) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class CpwlSpec:
    """Univariate CPWL activation in two-sided hinge form.

    right: tuple of (slope r_i, breakpoint a_i) for relu(x - a_i) terms
    left:  tuple of (slope l_j, breakpoint t_j) for relu(t_j - x) terms
    """

    right: tuple = ()
    left: tuple = ()

    def __post_init__(self):
        right = tuple((float(r), float(a)) for r, a in self.right)
        left = tuple((float(l), float(t)) for l, t in self.left)
        vals = [v for pair in right + left for v in pair]
        if not all(np.isfinite(vals)):
            raise ValueError("CPWL terms must be finite")
        if len(right) + len(left) > MAX_TERMS:
            raise ValueError(f"at most {MAX_TERMS} hinge terms supported")
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "left", left)

    @property
    def m(self) -> int:
        return len(self.right) + len(self.left)

    def slope_bound(self) -> float:
        """Largest |piece slope|, found by sweeping breakpoints left to right.

        Left of every breakpoint the slope is -sum l_j; crossing a_i adds
        r_i and crossing t_j adds l_j (the corresponding hinge switches).
        Coincident breakpoints are applied together so that slopes of
        zero-width intervals cannot inflate the bound.
        """
        events = sorted(
            [(a, r) for r, a in self.right] + [(t, l) for l, t in self.left]
        )
        slope = -sum(l for l, _ in self.left)
        worst = abs(slope)
        i = 0
        while i < len(events):
            here = events[i][0]
            while i < len(events) and events[i][0] == here:
                slope += events[i][1]
                i += 1
            worst = max(worst, abs(slope))
        return worst

    def to_json(self) -> dict:
        return {
            "type": "cpwl",
            "r": [r for r, _ in self.right],
            "a": [a for _, a in self.right],
            "l": [l for l, _ in self.left],
            "t": [t for _, t in self.left],
        }


# Builtin activations. RELU shares the CPWL machinery; MAXLU2 (block-wise
# max of two composed with relu) needs its own selection semantics.
RELU = "relu"
MAXLU2 = "maxlu2"

Activation = Union[str, CpwlSpec]

_RELU_SPEC = CpwlSpec(right=((1.0, 0.0),))


def _as_spec(act: Activation) -> CpwlSpec:
    if act == RELU:
        return _RELU_SPEC
    if isinstance(act, CpwlSpec):
        return act
    raise TypeError(f"not a point-wise CPWL activation: {act!r}")


def cpwl_eval(spec: CpwlSpec, x):
    """Evaluate the hinge-sum form at x (scalar or array)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for r, a in spec.right:
        out += r * np.maximum(x - a, 0.0)
    for l, t in spec.left:
        out += l * np.maximum(t - x, 0.0)
    return out if out.ndim else float(out)


def _active_masks(spec: CpwlSpec, x: np.ndarray) -> np.ndarray:
    """Per-element bitmask of active hinges.

    Bit i is the i-th right term (active iff x > a_i), bit len(right)+j the
    j-th left term (active iff x < t_j). At a breakpoint the hinge value is
    zero under either convention; patterns treat it as inactive so that
    region labels are deterministic.
    """
    masks = np.zeros(x.shape, dtype=np.int64)
    for i, (_, a) in enumerate(spec.right):
        masks |= (x > a).astype(np.int64) << i
    off = len(spec.right)
    for j, (_, t) in enumerate(spec.left):
        masks |= (x < t).astype(np.int64) << (off + j)
    return masks


def _mask_affine(spec: CpwlSpec, masks: np.ndarray):
    """(slope, offset) of the affine piece each mask selects."""
    slope = np.zeros(masks.shape)
    offset = np.zeros(masks.shape)
    for i, (r, a) in enumerate(spec.right):
        on = (masks >> i) & 1
        slope += r * on
        offset -= r * a * on
    off = len(spec.right)
    for j, (l, t) in enumerate(spec.left):
        on = (masks >> (off + j)) & 1
        slope -= l * on
        offset += l * t * on
    return slope, offset


def unrectify_diag(spec: CpwlSpec, x: float):
    """Frozen slope of the activation at x, with the active hinge set.

    Returns (value, active_set) where value = sum of active r_i minus sum
    of active l_j; holding active_set fixed, rho is affine in x with this
    slope.
    """
    xa = np.asarray(float(x))
    mask = int(_active_masks(spec, xa))
    slope, _ = _mask_affine(spec, np.asarray(mask))
    return float(slope), mask


def activation_apply(act: Activation, v: np.ndarray):
    """Apply an activation point-wise (or block-wise for MAXLU2).

    Returns (out, pattern). Re-applying the affine map the pattern induces
    reproduces out exactly: the output is computed from the frozen piece,
    not by re-evaluating the hinge sum.
    """
    v = np.asarray(v, dtype=np.float64)
    if act == MAXLU2:
        return _maxlu2_apply(v)
    spec = _as_spec(act)
    masks = _active_masks(spec, v)
    slope, offset = _mask_affine(spec, masks)
    return slope * v + offset, masks


def _maxlu2_apply(v: np.ndarray):
    """Largest positive entry of each consecutive pair; ties keep the first.

    Pattern has one {0,1} entry per input coordinate: exactly one 1 in a
    block when some entry wins, all 0 when the block is non-positive.
    """
    if v.shape[-1] % 2:
        raise DimMismatch("maxlu2 needs an even input length")
    x1 = v[..., 0::2]
    x2 = v[..., 1::2]
    first = (x1 >= x2) & (x1 > 0)
    second = (x2 > x1) & (x2 > 0)
    out = np.where(first, x1, np.where(second, x2, 0.0))
    pattern = np.zeros(v.shape, dtype=np.int64)
    pattern[..., 0::2] = first
    pattern[..., 1::2] = second
    return out, pattern


def _maxlu2_selection(pattern: np.ndarray):
    """Row-selection matrix realizing a frozen MAXLU2 pattern."""
    n = pattern.shape[0]
    sel = np.zeros((n // 2, n))
    for block in range(n // 2):
        if pattern[2 * block]:
            sel[block, 2 * block] = 1.0
        elif pattern[2 * block + 1]:
            sel[block, 2 * block + 1] = 1.0
    return sel


@dataclass(frozen=True)
class Transform:
    """Non-linear transform: same function applied to every input.

    kind: softmax | sigmoid | tanh | attn_scores | attn_mix
    lam: inverse temperature (softmax)
    seq, width: token count and token width (attention stages)
    lipschitz: declared bound; None means unbounded (stability refuses)
    """

    kind: str
    lam: float = 1.0
    seq: int = 0
    width: int = 0
    lipschitz: Optional[float] = None

    def __post_init__(self):
        bounds = {"softmax": float(self.lam), "sigmoid": 1.0, "tanh": 1.0}
        if self.kind in bounds:
            object.__setattr__(self, "lipschitz", bounds[self.kind])
        elif self.kind not in ("attn_scores", "attn_mix"):
            raise ValueError(f"unknown transform kind {self.kind!r}")

    def in_dim(self) -> Optional[int]:
        if self.kind == "attn_scores":
            return self.width * (1 + self.seq)
        if self.kind == "attn_mix":
            return self.seq + self.seq * self.width
        return None  # any

    def out_dim(self, n: int) -> int:
        if self.kind == "attn_scores":
            return self.seq
        if self.kind == "attn_mix":
            return self.width
        return n

    def to_json(self) -> dict:
        if self.kind == "softmax":
            return {"type": "softmax", "lambda": self.lam}
        if self.kind in ("sigmoid", "tanh"):
            return {"type": self.kind}
        out = {"type": self.kind, "seq": self.seq, "width": self.width}
        if self.lipschitz is not None:
            out["lipschitz"] = self.lipschitz
        return out


def softmax(lam: float = 1.0) -> Transform:
    return Transform("softmax", lam=float(lam))


def transform_apply(t: Transform, v: np.ndarray) -> np.ndarray:
    """Evaluate a transform; softmax subtracts the max before exponentiating
    so large scores cannot overflow."""
    v = np.asarray(v, dtype=np.float64)
    if t.kind == "softmax":
        z = t.lam * v
        z = z - np.max(z, axis=-1, keepdims=True)
        e = np.exp(z)
        return e / np.sum(e, axis=-1, keepdims=True)
    if t.kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-v))
    if t.kind == "tanh":
        return np.tanh(v)
    if t.kind == "attn_scores":
        # [query ; key_1 .. key_seq] -> (<query, key_j>)_j
        w, s = t.width, t.seq
        q = v[..., :w]
        keys = v[..., w:].reshape(v.shape[:-1] + (s, w))
        return np.einsum("...w,...sw->...s", q, keys)
    if t.kind == "attn_mix":
        # [p_1 .. p_seq ; v_1 .. v_seq] -> sum_j p_j v_j
        w, s = t.width, t.seq
        p = v[..., :s]
        vals = v[..., s:].reshape(v.shape[:-1] + (s, w))
        return np.einsum("...s,...sw->...w", p, vals)
    raise ValueError(t.kind)


@dataclass(frozen=True)
class ArcOp:
    """One element attached to an arc.

    kind is one of identity | linear | affine | activation |
    activation_affine | transform | transform_affine. Affine parts are
    applied before the activation/transform, matching composition order.
    """

    kind: str
    w: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    act: Optional[Activation] = None
    tr: Optional[Transform] = None
    dim: Optional[int] = None  # fixes input dim for identity/activation/transform

    def __post_init__(self):
        if self.w is not None:
            w = _as_readonly(self.w)
            if w.ndim != 2 or not np.isfinite(w).all():
                raise ValueError("weight must be a finite 2-d matrix")
            object.__setattr__(self, "w", w)
        if self.b is not None:
            b = _as_readonly(self.b)
            if b.ndim != 1 or not np.isfinite(b).all():
                raise ValueError("bias must be a finite vector")
            if self.w is not None and b.shape[0] != self.w.shape[0]:
                raise ValueError("bias length must match weight rows")
            object.__setattr__(self, "b", b)

    # dimension bookkeeping -------------------------------------------------

    def check_in(self, n: int) -> int:
        """Validate against source dimension n and return the output dim."""
        if self.kind == "identity":
            if self.dim is not None and self.dim != n:
                raise DimMismatch(f"identity of dim {self.dim} fed {n}")
            return n
        if self.kind in ("linear", "affine", "activation_affine", "transform_affine"):
            if self.w.shape[1] != n:
                raise DimMismatch(f"matrix expects {self.w.shape[1]} inputs, got {n}")
            pre = self.w.shape[0]
        else:
            if self.dim is not None and self.dim != n:
                raise DimMismatch(f"op of dim {self.dim} fed {n}")
            pre = n
        if self.kind in ("activation", "activation_affine"):
            if self.act == MAXLU2:
                if pre % 2:
                    raise DimMismatch("maxlu2 needs an even pre-activation dim")
                return pre // 2
            return pre
        if self.kind in ("transform", "transform_affine"):
            want = self.tr.in_dim()
            if want is not None and want != pre:
                raise DimMismatch(f"transform expects {want} inputs, got {pre}")
            return self.tr.out_dim(pre)
        return pre

    @property
    def has_pattern(self) -> bool:
        return self.kind in ("activation", "activation_affine")

    @property
    def is_transform(self) -> bool:
        return self.kind in ("transform", "transform_affine")

    # evaluation ------------------------------------------------------------

    def apply(self, x: np.ndarray):
        """Evaluate on a vector, or on a batch with samples in rows.

        Returns (out, pattern); pattern is None for pattern-free ops.
        """
        if self.kind == "identity":
            return x, None
        if self.kind == "linear":
            return x @ self.w.T, None
        if self.kind == "affine":
            return x @ self.w.T + self.b, None
        if self.kind == "activation":
            return activation_apply(self.act, x)
        if self.kind == "activation_affine":
            return activation_apply(self.act, x @ self.w.T + self.b)
        if self.kind == "transform":
            return transform_apply(self.tr, x), None
        if self.kind == "transform_affine":
            return transform_apply(self.tr, x @ self.w.T + self.b), None
        raise ValueError(self.kind)

    def frozen_affine(self, pattern: Optional[np.ndarray], a_in: np.ndarray, b_in: np.ndarray):
        """Push an affine map (A, b) of the network input through this arc
        with the activation frozen at `pattern`."""
        if self.kind == "identity":
            return a_in, b_in
        if self.kind == "linear":
            return self.w @ a_in, self.w @ b_in
        if self.kind == "affine":
            return self.w @ a_in, self.w @ b_in + self.b
        if self.kind in ("activation", "activation_affine"):
            if self.kind == "activation_affine":
                a_in = self.w @ a_in
                b_in = self.w @ b_in + self.b
            if self.act == MAXLU2:
                sel = _maxlu2_selection(pattern)
                return sel @ a_in, sel @ b_in
            spec = _as_spec(self.act)
            slope, offset = _mask_affine(spec, pattern)
            return slope[:, None] * a_in, slope * b_in + offset
        from .errors import TransformPresent

        raise TransformPresent("frozen affine map undefined through a transform")


def identity(dim: Optional[int] = None) -> ArcOp:
    return ArcOp("identity", dim=dim)


def linear(w) -> ArcOp:
    return ArcOp("linear", w=w)


def affine(w, b) -> ArcOp:
    return ArcOp("affine", w=w, b=b)


def activation(act: Activation, dim: Optional[int] = None) -> ArcOp:
    _check_act(act)
    return ArcOp("activation", act=act, dim=dim)


def activation_affine(act: Activation, w, b=None) -> ArcOp:
    _check_act(act)
    w = np.asarray(w, dtype=np.float64)
    if b is None:
        b = np.zeros(w.shape[0])
    return ArcOp("activation_affine", act=act, w=w, b=b)


def transform(tr: Transform, dim: Optional[int] = None) -> ArcOp:
    return ArcOp("transform", tr=tr, dim=dim)


def transform_affine(tr: Transform, w, b=None) -> ArcOp:
    w = np.asarray(w, dtype=np.float64)
    if b is None:
        b = np.zeros(w.shape[0])
    return ArcOp("transform_affine", tr=tr, w=w, b=b)


def _check_act(act: Activation):
    if act != MAXLU2:
        _as_spec(act)


def uniform_bound(op: ArcOp) -> Optional[float]:
    """Uniform bound on the frozen-slope magnitude of the arc's non-linearity.

    Activation arcs: largest |piece slope| (1 for relu and maxlu2).
    Transform arcs: the declared Lipschitz bound, None when unbounded.
    Activation-free arcs: 1 (they contribute only their matrix norm).
    """
    if op.kind in ("activation", "activation_affine"):
        if op.act == MAXLU2:
            return 1.0
        return _as_spec(op.act).slope_bound()
    if op.kind in ("transform", "transform_affine"):
        return op.tr.lipschitz
    return 1.0
