"""DAG structure: builder, validation, levels, computable sub-graphs.

A network is a directed acyclic graph with a single input node (in-degree
zero) and a single output node (out-degree zero). Arcs carry `ArcOp`
elements. A node with several incoming arcs concatenates them in port
order; a node with several outgoing arcs feeds each arc the same value.

Graphs are built through `GraphBuilder` (which rejects arcs that would
close a cycle or break shapes) and frozen into immutable `DagNet` objects
for analysis. Frozen graphs are safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import (
    CycleCreated,
    CycleDetected,
    DimMismatch,
    InvalidGraph,
    Unreachable,
)
from .ops import ArcOp


@dataclass(frozen=True)
class Arc:
    index: int
    src: str
    dst: str
    port: int
    op: ArcOp


@dataclass(frozen=True)
class LevelMap:
    """Longest-path depth of every node.

    l maps node -> number of arcs on the longest input-to-node path; L is
    the output depth; levels groups nodes by depth. Attained depths always
    form the gapless range 0..L on a valid graph.
    """

    l: Dict[str, int]
    L: int
    levels: Dict[int, Tuple[str, ...]]

    def count(self, n: int) -> int:
        return len(self.levels.get(n, ()))


def _toposort(nodes, out_arcs, in_degree) -> List[str]:
    """Kahn's algorithm; ties broken by node id for determinism."""
    ready = sorted(n for n in nodes if in_degree[n] == 0)
    indeg = dict(in_degree)
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        inserted = []
        for arc in out_arcs.get(node, ()):
            indeg[arc.dst] -= 1
            if indeg[arc.dst] == 0:
                inserted.append(arc.dst)
        if inserted:
            ready = sorted(set(ready) | set(inserted))
    if len(order) != len(nodes):
        raise CycleDetected("graph contains a directed cycle")
    return order


class GraphBuilder:
    """Mutable staging area for a network.

    Arcs are appended with `add_arc`; `freeze` validates every invariant
    and returns the immutable DagNet. Builders are single-threaded.
    """

    def __init__(self, input_node: str, input_dim: int):
        self.input_node = str(input_node)
        self.input_dim = int(input_dim)
        self.nodes = {self.input_node}
        self.arcs: List[Arc] = []
        self._out: Dict[str, List[Arc]] = {}
        self._in: Dict[str, List[Arc]] = {}

    def _reaches(self, start: str, goal: str) -> bool:
        stack, seen = [start], set()
        while stack:
            node = stack.pop()
            if node == goal:
                return True
            if node in seen:
                continue
            seen.add(node)
            stack.extend(a.dst for a in self._out.get(node, ()))
        return False

    def node_dim(self, node: str) -> Optional[int]:
        """Current output dimension of a node, None while undetermined."""
        dims: Dict[str, Optional[int]] = {self.input_node: self.input_dim}
        stack = [node]
        while stack:
            top = stack[-1]
            if top in dims:
                stack.pop()
                continue
            incoming = self._in.get(top)
            if not incoming:
                dims[top] = None
                stack.pop()
                continue
            pending = [a.src for a in incoming if a.src not in dims]
            if pending:
                stack.extend(pending)
                continue
            total = 0
            for arc in sorted(incoming, key=lambda a: a.port):
                src_dim = dims[arc.src]
                if src_dim is None:
                    total = None
                    break
                total += arc.op.check_in(src_dim)
            dims[top] = total
            stack.pop()
        return dims[node]

    def add_arc(self, src: str, dst: str, op: ArcOp, port: int = 0) -> "GraphBuilder":
        src, dst = str(src), str(dst)
        if src not in self.nodes:
            raise Unreachable(f"source node {src!r} does not exist")
        if dst in self.nodes and self._reaches(dst, src):
            raise CycleCreated(f"arc {src}->{dst} closes a cycle")
        src_dim = self.node_dim(src)
        if src_dim is not None:
            op.check_in(src_dim)  # raises DimMismatch early when shapes are known
        arc = Arc(len(self.arcs), src, dst, int(port), op)
        self.nodes.add(dst)
        self.arcs.append(arc)
        self._out.setdefault(src, []).append(arc)
        self._in.setdefault(dst, []).append(arc)
        return self

    def validate(self) -> List[Tuple[str, str]]:
        return validate(self)

    def freeze(self) -> "DagNet":
        findings = validate(self)
        if findings:
            raise InvalidGraph(findings)
        return DagNet(self)


def validate(g) -> List[Tuple[str, str]]:
    """Structural findings for a builder or a frozen net; empty means valid."""
    nodes = set(g.nodes)
    arcs = list(g.arcs)
    findings: List[Tuple[str, str]] = []

    out_arcs: Dict[str, List[Arc]] = {}
    in_arcs: Dict[str, List[Arc]] = {}
    for arc in arcs:
        out_arcs.setdefault(arc.src, []).append(arc)
        in_arcs.setdefault(arc.dst, []).append(arc)

    indeg = {n: len(in_arcs.get(n, ())) for n in nodes}
    try:
        _toposort(nodes, out_arcs, indeg)
    except CycleDetected:
        findings.append(("cycle", "graph contains a directed cycle"))
        return findings

    sources = sorted(n for n in nodes if indeg[n] == 0)
    sinks = sorted(n for n in nodes if not out_arcs.get(n))
    if g.input_node not in nodes:
        findings.append(("no input", "declared input node missing"))
    elif sources != [g.input_node]:
        extra = [n for n in sources if n != g.input_node]
        if extra:
            findings.append(("multiple inputs", f"extra source nodes {extra}"))
        if g.input_node not in sources:
            findings.append(("input has in-arcs", "declared input node is not a source"))
    if len(sinks) > 1:
        findings.append(("multiple outputs", f"sink nodes {sinks}"))
    elif not sinks:
        findings.append(("no output", "every node has outgoing arcs"))

    reach = {g.input_node}
    stack = [g.input_node]
    while stack:
        for arc in out_arcs.get(stack.pop(), ()):
            if arc.dst not in reach:
                reach.add(arc.dst)
                stack.append(arc.dst)
    unreachable = sorted(nodes - reach)
    if unreachable:
        findings.append(("unreachable", f"nodes {unreachable} unreachable from input"))

    if sinks:
        coreach = set(sinks[:1])
        stack = [sinks[0]]
        while stack:
            for arc in in_arcs.get(stack.pop(), ()):
                if arc.src not in coreach:
                    coreach.add(arc.src)
                    stack.append(arc.src)
        dead = sorted(nodes - coreach)
        if dead:
            findings.append(("dead end", f"nodes {dead} do not reach the output"))

    for node, incoming in in_arcs.items():
        ports = sorted(a.port for a in incoming)
        if ports != list(range(len(ports))):
            findings.append(("bad ports", f"node {node} ports {ports} not 0..{len(ports) - 1}"))

    # dimension propagation in topological order
    if not findings:
        dims = {g.input_node: g.input_dim}
        for node in _toposort(nodes, out_arcs, indeg):
            if node == g.input_node:
                continue
            total = 0
            ok = True
            for arc in sorted(in_arcs[node], key=lambda a: a.port):
                try:
                    total += arc.op.check_in(dims[arc.src])
                except DimMismatch as exc:
                    findings.append(("dim mismatch", f"arc {arc.src}->{arc.dst}: {exc}"))
                    ok = False
            if ok:
                dims[node] = total
            else:
                break
    return findings


class DagNet:
    """Frozen, validated network. Treat all attributes as read-only."""

    def __init__(self, builder: GraphBuilder):
        self.input_node = builder.input_node
        self.input_dim = builder.input_dim
        self.nodes: Tuple[str, ...] = tuple(sorted(builder.nodes))
        self.arcs: Tuple[Arc, ...] = tuple(builder.arcs)

        self.out_arcs: Dict[str, Tuple[Arc, ...]] = {n: () for n in self.nodes}
        self.in_arcs: Dict[str, Tuple[Arc, ...]] = {n: () for n in self.nodes}
        for arc in self.arcs:
            self.out_arcs[arc.src] += (arc,)
        for node in self.nodes:
            incoming = [a for a in self.arcs if a.dst == node]
            self.in_arcs[node] = tuple(sorted(incoming, key=lambda a: a.port))

        indeg = {n: len(self.in_arcs[n]) for n in self.nodes}
        self.topo: Tuple[str, ...] = tuple(_toposort(self.nodes, self.out_arcs, indeg))
        self.output_node = next(n for n in self.nodes if not self.out_arcs[n])

        dims = {self.input_node: self.input_dim}
        for node in self.topo:
            if node == self.input_node:
                continue
            dims[node] = sum(a.op.check_in(dims[a.src]) for a in self.in_arcs[node])
        self.node_dim: Dict[str, int] = dims

        self._levels: Optional[LevelMap] = None
        self._subgraphs: Dict[str, "DagNet"] = {}

    # queries ---------------------------------------------------------------

    def topological_order(self) -> List[str]:
        return list(self.topo)

    def l_values(self) -> LevelMap:
        """Longest-path depth per node; computed once and cached."""
        if self._levels is None:
            depth = {n: 0 for n in self.nodes}
            for node in self.topo:
                for arc in self.out_arcs[node]:
                    depth[arc.dst] = max(depth[arc.dst], depth[node] + 1)
            top = depth[self.output_node]
            levels: Dict[int, Tuple[str, ...]] = {}
            for node in sorted(self.nodes):
                levels.setdefault(depth[node], ())
                levels[depth[node]] += (node,)
            attained = sorted(levels)
            if attained != list(range(top + 1)):
                raise CycleDetected(f"depth values {attained} have gaps")
            self._levels = LevelMap(depth, top, levels)
        return self._levels

    def computable_subgraph(self, a: str) -> "DagNet":
        """Sub-network of every input-to-a path; its output node is a."""
        if a not in self.nodes:
            raise Unreachable(f"no such node {a!r}")
        if a in self._subgraphs:
            return self._subgraphs[a]
        # nodes reachable from input that also reach a
        ahead = {a}
        stack = [a]
        while stack:
            for arc in self.in_arcs[stack.pop()]:
                if arc.src not in ahead:
                    ahead.add(arc.src)
                    stack.append(arc.src)
        if self.input_node not in ahead:
            raise Unreachable(f"node {a!r} not reachable from the input")
        builder = GraphBuilder(self.input_node, self.input_dim)
        builder.nodes |= ahead
        for arc in self.arcs:
            if arc.src in ahead and arc.dst in ahead:
                builder.arcs.append(arc)
                builder._out.setdefault(arc.src, []).append(arc)
                builder._in.setdefault(arc.dst, []).append(arc)
        sub = DagNet(builder)
        self._subgraphs[a] = sub
        return sub

    def to_builder(self) -> GraphBuilder:
        builder = GraphBuilder(self.input_node, self.input_dim)
        for arc in self.arcs:
            builder.add_arc(arc.src, arc.dst, arc.op, arc.port)
        return builder

    def with_arc(self, src: str, dst: str, op: ArcOp, port: int = 0) -> "DagNet":
        """Functional extension: a new frozen net with one more arc."""
        return self.to_builder().add_arc(src, dst, op, port).freeze()


def add_arc(net, src: str, dst: str, op: ArcOp, port: int = 0):
    """Append an arc. Builders are extended in place; frozen nets are
    immutable, so a new frozen net is returned."""
    if isinstance(net, GraphBuilder):
        return net.add_arc(src, dst, op, port)
    return net.with_arc(src, dst, op, port)


def topological_order(net: DagNet) -> List[str]:
    return net.topological_order()


def l_values(net: DagNet) -> LevelMap:
    return net.l_values()


def computable_subgraph(net: DagNet, a: str) -> DagNet:
    return net.computable_subgraph(a)
