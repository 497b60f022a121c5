"""Decision procedures on explored graphs, one per resource mode.

These stand in for the space-bounded oracle the reduction calls once it has
an explicit graph.  Everything is exact: probabilities are Fractions.

Query text format (one record per line, fields separated by spaces)::

    query 1
    mode <mode>
    S <walk bound>
    r <i>:<b>
    t <i>:<b>
    rej <i>:<b> | rej none
    node <i>:<b>            (sorted)
    edge <i>:<b> <i>:<b> <labels>   (sorted; labels is 0, 1 or 01)
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

from .machine import Mode, Outcome, Verdict, threshold_verdict

if TYPE_CHECKING:
    from .coc import ExploredGraph, Node


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class OracleQuery:
    graph: "ExploredGraph"
    mode: Mode

    @property
    def r(self):
        return self.graph.r

    @property
    def t(self):
        return self.graph.t

    @property
    def rej(self):
        return self.graph.rej


def _adjacency(g: "ExploredGraph") -> dict:
    adj: dict = {v: [] for v in g.nodes}
    for (a, b), labels in g.edges.items():
        if a not in adj or b not in adj:
            raise OracleError(f"edge {a}->{b} leaves the node set")
        adj[a].append((labels, b))
    return adj


def reachable(g: "ExploredGraph", a: "Node", b: "Node") -> bool:
    """Directed reachability from ``a`` to ``b``, labels ignored."""
    for v in (a, b):
        if v not in g.nodes:
            raise OracleError(f"unknown node {v}")
    adj = _adjacency(g)
    seen = {a}
    stack = [a]
    while stack:
        v = stack.pop()
        if v == b:
            return True
        for _, w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def _branches(v, out):
    succ = [None, None]
    for labels, w in out:
        for label in labels:
            if succ[label] is not None and succ[label] != w:
                raise OracleError(f"node {v} has two successors labelled {label}")
            succ[label] = w
    return succ


def accept_probability(g: "ExploredGraph", r: "Node | None" = None) -> Fraction:
    """Probability of reaching ``t`` from ``r`` when every step flips a fair coin."""
    r = g.r if r is None else r
    if r not in g.nodes:
        raise OracleError(f"unknown node {r}")
    adj = _adjacency(g)
    prob: dict = {}
    on_stack = {r}
    stack = [(r, iter(adj[r]))]
    while stack:
        v, it = stack[-1]
        nxt = next(it, None)
        if nxt is not None:
            w = nxt[1]
            if w in on_stack:
                raise OracleError(f"cycle through node {w}")
            if w not in prob:
                on_stack.add(w)
                stack.append((w, iter(adj[w])))
            continue
        stack.pop()
        on_stack.discard(v)
        out = adj[v]
        if not out:
            if v == g.t:
                prob[v] = Fraction(1)
            elif v == g.rej:
                prob[v] = Fraction(0)
            else:
                raise OracleError(f"node {v} is a sink but neither accept nor reject")
            continue
        s0, s1 = _branches(v, out)
        if s0 is None or s1 is None:
            raise OracleError(f"node {v} is missing a labelled successor")
        prob[v] = (prob[s0] + prob[s1]) / 2
    return prob[r]


def decide(q: OracleQuery) -> Verdict:
    g, mode = q.graph, Mode(q.mode)
    if mode in (Mode.DETERMINISTIC, Mode.NONDET):
        return Verdict(Outcome.ACCEPT if reachable(g, g.r, g.t) else Outcome.REJECT)
    if mode is Mode.CONONDET:
        hit = g.rej is not None and g.rej in g.nodes and reachable(g, g.r, g.rej)
        return Verdict(Outcome.REJECT if hit else Outcome.ACCEPT)
    return threshold_verdict(mode, accept_probability(g))


# ---------------------------------------------------------------------------
# serialization


def _node(v) -> str:
    return f"{v[0]}:{v[1]}"


def _labels(labels) -> str:
    return "".join(str(b) for b in sorted(labels))


def serialize_query(q: OracleQuery) -> str:
    g = q.graph
    lines = ["query 1", f"mode {Mode(q.mode).value}", f"S {g.S}",
             f"r {_node(g.r)}", f"t {_node(g.t)}",
             f"rej {_node(g.rej) if g.rej is not None else 'none'}"]
    lines += [f"node {_node(v)}" for v in sorted(g.nodes)]
    lines += [f"edge {_node(a)} {_node(b)} {_labels(l)}" for (a, b), l in sorted(g.edges.items())]
    return "\n".join(lines) + "\n"


def _parse_node(tok: str):
    i, _, b = tok.partition(":")
    return (int(i), int(b))


def parse_query(text: str) -> OracleQuery:
    from .coc import ExploredGraph

    fields: dict = {}
    nodes, edges = set(), {}
    for lineno, line in enumerate(text.splitlines(), 1):
        tok = line.split()
        if not tok:
            continue
        try:
            key = tok[0]
            if key == "node":
                nodes.add(_parse_node(tok[1]))
            elif key == "edge":
                edges[(_parse_node(tok[1]), _parse_node(tok[2]))] = frozenset(int(ch) for ch in tok[3])
            elif key in ("query", "mode", "S", "r", "t", "rej"):
                fields[key] = tok[1]
            else:
                raise OracleError(f"unknown record {key!r}")
        except (IndexError, ValueError) as exc:
            raise OracleError(f"line {lineno}: {exc}") from None
    if fields.get("query") != "1":
        raise OracleError("missing or unsupported query header")
    rej = None if fields["rej"] == "none" else _parse_node(fields["rej"])
    g = ExploredGraph(nodes, edges, _parse_node(fields["r"]), _parse_node(fields["t"]), rej,
                      int(fields["S"]))
    return OracleQuery(g, Mode(fields["mode"]))


def query_bits(g: "ExploredGraph") -> int:
    """Length of the query in a packed binary form: fixed-width node ids, two label bits per edge."""
    idbits = g.S.bit_length() + 1
    return idbits * (len(g.nodes) + 3) + len(g.edges) * (2 * idbits + 2)
