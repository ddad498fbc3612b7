"""Graph description files.

A network is stored as a UTF-8 JSON document plus one CSV per weight
matrix and bias vector. The JSON lists nodes, the input node and its
dimension, and arcs in index order; each arc holds its op as an object.
Weight CSVs are row-major with comma-separated columns and newline rows;
vectors occupy a single row. Floats are written with Python's shortest
round-trip repr, so save -> load -> save reproduces files byte for byte.

Op objects:
    {"kind": "identity"}
    {"kind": "linear", "w": "g_w0003.csv"}
    {"kind": "affine", "w": ..., "b": ...}
    {"kind": "activation", "act": ACT}
    {"kind": "activation_affine", "act": ACT, "w": ..., "b": ...}
    {"kind": "transform", "transform": TR}
    {"kind": "transform_affine", "transform": TR, "w": ..., "b": ...}

ACT: {"type": "relu"} | {"type": "maxlu2"}
   | {"type": "cpwl", "r": [...], "a": [...], "l": [...], "t": [...]}
TR:  {"type": "softmax", "lambda": x} | {"type": "sigmoid"} | {"type": "tanh"}
   | {"type": "attn_scores" | "attn_mix", "seq": n, "width": k
      [, "lipschitz": x]}
"""

from __future__ import annotations

import json
import os
from typing import Optional

import numpy as np

from .errors import MissingWeights, ParseError
from .graph import DagNet, GraphBuilder
from .ops import MAXLU2, RELU, ArcOp, CpwlSpec, Transform

__all__ = ["save_graph", "load_graph"]

FORMAT = "unrectify-graph"


def _write_csv(path: str, array: np.ndarray) -> None:
    rows = np.atleast_2d(array)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def _read_csv(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise MissingWeights(f"weight file {path!r} does not exist")
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    if not rows or len({len(r) for r in rows}) != 1:
        raise ParseError(f"{path}: empty or ragged CSV")
    return np.asarray(rows, dtype=np.float64)


def _act_to_json(act) -> dict:
    if act == RELU:
        return {"type": "relu"}
    if act == MAXLU2:
        return {"type": "maxlu2"}
    if isinstance(act, CpwlSpec):
        return act.to_json()
    raise ParseError(f"cannot serialize activation {act!r}")


def _act_from_json(obj: dict):
    kind = obj.get("type")
    if kind == "relu":
        return RELU
    if kind == "maxlu2":
        return MAXLU2
    if kind == "cpwl":
        return CpwlSpec(
            right=tuple(zip(obj["r"], obj["a"])), left=tuple(zip(obj["l"], obj["t"]))
        )
    raise ParseError(f"unknown activation type {kind!r}")


def _tr_from_json(obj: dict) -> Transform:
    kind = obj.get("type")
    if kind == "softmax":
        return Transform("softmax", lam=float(obj["lambda"]))
    if kind in ("sigmoid", "tanh"):
        return Transform(kind)
    if kind in ("attn_scores", "attn_mix"):
        return Transform(
            kind,
            seq=int(obj["seq"]),
            width=int(obj["width"]),
            lipschitz=obj.get("lipschitz"),
        )
    raise ParseError(f"unknown transform type {kind!r}")


def save_graph(net: DagNet, path: str) -> None:
    """Write the JSON document; weight CSVs go next to it."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    stem = os.path.splitext(os.path.basename(path))[0]
    arcs = []
    # weight files are numbered by arc position, not stored index: saved
    # sub-graphs keep gaps in their original indices, and reload renumbers
    for position, arc in enumerate(net.arcs):
        op: dict = {"kind": arc.op.kind}
        if arc.op.act is not None:
            op["act"] = _act_to_json(arc.op.act)
        if arc.op.tr is not None:
            op["transform"] = arc.op.tr.to_json()
        if arc.op.w is not None:
            name = f"{stem}_w{position:04d}.csv"
            _write_csv(os.path.join(directory, name), arc.op.w)
            op["w"] = name
        if arc.op.b is not None:
            name = f"{stem}_b{position:04d}.csv"
            _write_csv(os.path.join(directory, name), arc.op.b)
            op["b"] = name
        arcs.append({"from": arc.src, "to": arc.dst, "port": arc.port, "op": op})
    doc = {
        "format": FORMAT,
        "input": net.input_node,
        "input_dim": net.input_dim,
        "output": net.output_node,
        "nodes": list(net.nodes),
        "arcs": arcs,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _op_from_json(obj: dict, directory: str, where: str) -> ArcOp:
    kind = obj.get("kind")
    w: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    if "w" in obj:
        w = _read_csv(os.path.join(directory, obj["w"]))
    if "b" in obj:
        b = _read_csv(os.path.join(directory, obj["b"]))
        if b.shape[0] != 1:
            raise ParseError(f"{where}: bias CSV must be a single row")
        b = b[0]
    if kind == "identity":
        return ArcOp("identity")
    if kind == "linear":
        return ArcOp("linear", w=w)
    if kind == "affine":
        return ArcOp("affine", w=w, b=b)
    if kind == "activation":
        return ArcOp("activation", act=_act_from_json(obj["act"]))
    if kind == "activation_affine":
        if b is None:
            b = np.zeros(w.shape[0])
        return ArcOp("activation_affine", act=_act_from_json(obj["act"]), w=w, b=b)
    if kind == "transform":
        return ArcOp("transform", tr=_tr_from_json(obj["transform"]))
    if kind == "transform_affine":
        if b is None:
            b = np.zeros(w.shape[0])
        return ArcOp("transform_affine", tr=_tr_from_json(obj["transform"]), w=w, b=b)
    raise ParseError(f"{where}: unknown op kind {kind!r}")


def load_graph(path: str) -> DagNet:
    """Parse a graph document and freeze the network it describes."""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if doc.get("format") != FORMAT:
        raise ParseError(f"{path}: not a {FORMAT} file")
    for key in ("input", "input_dim", "arcs"):
        if key not in doc:
            raise ParseError(f"{path}: missing field {key!r}")
    builder = GraphBuilder(doc["input"], int(doc["input_dim"]))
    builder.nodes |= {str(n) for n in doc.get("nodes", ())}
    for i, arc in enumerate(doc["arcs"]):
        where = f"{path}: arcs[{i}]"
        for key in ("from", "to", "op"):
            if key not in arc:
                raise ParseError(f"{where}: missing field {key!r}")
        op = _op_from_json(arc["op"], directory, where)
        builder.add_arc(arc["from"], arc["to"], op, int(arc.get("port", 0)))
    return builder.freeze()
