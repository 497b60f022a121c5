"""Independent reference routes used by the tests.

Everything here is built from ``machine.step`` over the whole configuration
universe, never from the predecessor index or the rotation map.
"""

from __future__ import annotations

from collections import defaultdict, deque
from functools import lru_cache
from itertools import product

import numpy as np

from catalytic.corpus import CORPUS
from catalytic.machine import Configuration, MachineSpec, as_bits, step


def universe(spec: MachineSpec, n: int):
    for q, ih, wh, ch, w, g in product(range(len(spec.states)), range(n), range(spec.s),
                                       range(spec.c), range(2**spec.s), range(2**spec.c)):
        yield Configuration(q, ih, wh, ch, w, g)


@lru_cache(maxsize=64)
def zero_graph(spec: MachineSpec, x: str):
    """Undirected 0-graph as an adjacency dict, plus directed 0-successors."""
    bits = as_bits(x)
    adj = defaultdict(set)
    succ = {}
    for v in universe(spec, len(bits)):
        adj[v]
        if spec.is_halting(v.state):
            continue
        u = step(spec, bits, v, 0)
        succ[v] = u
        adj[v].add(u)
        adj[u].add(v)
    return dict(adj), succ


def component(spec: MachineSpec, x: str, v: Configuration) -> set:
    adj, _ = zero_graph(spec, x)
    seen = {v}
    queue = deque([v])
    while queue:
        for u in adj[queue.popleft()]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return seen


def expected_size(vertices: int, S: int):
    """Tour length the walk must report for a tree with ``vertices`` vertices under walk bound S."""
    if vertices == 1:
        return 1
    if 2 * (vertices - 1) <= S:
        return 2 * (vertices - 1)
    return float("inf")


def valid_cases(cs=(3, 4)):
    """(name, c, spec, x) for every valid corpus machine and input."""
    out = []
    for name, entry in CORPUS.items():
        if not entry.valid:
            continue
        for c in cs:
            spec = entry.build(c)
            for x in entry.inputs:
                out.append((name, c, spec, x))
    return out


def case_id(case) -> str:
    return f"{case[0]}-c{case[1]}-{case[3]}"


def hand_forest(edges, halting, roots, W=2, c=1):
    """Explicit forest for negative controls: vertex ids, halting mask, (accept, reject) per tape."""
    from catalytic.verify import ZeroForest

    return ZeroForest(np.array(edges, dtype=np.int64).reshape(-1, 2), np.array(halting, dtype=bool),
                      np.array(roots, dtype=np.int64), W, c)
