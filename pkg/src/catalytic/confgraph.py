"""Bit-exact configuration layout and Euler-tour exploration of 0-graphs.

The 0-graph keeps only 0-labelled edges of the configuration graph and
forgets their direction.  Every vertex has at most one forward edge, so the
component of a halting configuration is a tree, and the rotation map below
walks it as an Euler tour using constant-size state.

Edge slots at a vertex: index 0 is the forward 0-edge when there is one,
followed by the backward 0-edges in canonical predecessor order.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

from .machine import Configuration, MachineSpec, as_bits, degree_bound, predecessors, step

INF = math.inf


def _width(count: int) -> int:
    return (count - 1).bit_length()


@dataclass(frozen=True)
class Layout:
    """Fixed serialization: state, input head, work head, cat head, work cells, cat cells.

    Numeric fields are big-endian; tape cells are emitted cell 0 first.  The
    first ``W`` bits form the extended work part, the last ``c`` bits the
    catalytic tape.
    """

    n: int
    s: int
    c: int
    num_states: int

    @classmethod
    def for_machine(cls, spec: MachineSpec, n: int) -> "Layout":
        if n < 1:
            raise ValueError("input must have at least one bit")
        return cls(n, spec.s, spec.c, len(spec.states))

    @property
    def widths(self) -> tuple[int, int, int, int]:
        return (_width(self.num_states), _width(self.n), _width(self.s), _width(self.c))

    @property
    def W(self) -> int:
        return sum(self.widths) + self.s

    @property
    def L(self) -> int:
        return self.W + self.c

    def work_part(self, conf: Configuration) -> str:
        out = []
        for value, width in zip(conf[:4], self.widths):
            if width:
                out.append(format(value, f"0{width}b"))
        out.append("".join(str((conf.work >> i) & 1) for i in range(self.s)))
        return "".join(out)

    def serialize(self, conf: Configuration) -> str:
        return self.work_part(conf) + "".join(str((conf.cat >> i) & 1) for i in range(self.c))

    def conf_bit(self, conf: Configuration, b: int) -> int:
        if not 0 <= b < self.L:
            raise IndexError(f"bit {b} outside layout of length {self.L}")
        return int(self.serialize(conf)[b])

    def join(self, work_part: str, cat: int) -> Configuration:
        if len(work_part) != self.W or set(work_part) - {"0", "1"}:
            raise ValueError("work part has the wrong shape")
        fields = []
        pos = 0
        for width in self.widths:
            fields.append(int(work_part[pos:pos + width], 2) if width else 0)
            pos += width
        limits = (self.num_states, self.n, self.s, self.c)
        for value, limit in zip(fields, limits):
            if value >= limit:
                raise ValueError("field value out of range")
        work = sum(int(ch) << i for i, ch in enumerate(work_part[pos:]))
        return Configuration(*fields, work, cat)

    def deserialize(self, bits: str) -> Configuration:
        if len(bits) != self.L:
            raise ValueError(f"expected {self.L} bits, got {len(bits)}")
        cat = sum(int(ch) << i for i, ch in enumerate(bits[self.W:]))
        return self.join(bits[:self.W], cat)

    def to_hex(self, conf: Configuration) -> str:
        return format(int(self.serialize(conf), 2), f"0{(self.L + 3) // 4}x")


class EdgeRef(NamedTuple):
    conf: Configuration
    index: int


class _Register(contextlib.AbstractContextManager):
    __slots__ = ("meter", "name", "bits")

    def __init__(self, meter, name, bits):
        self.meter, self.name, self.bits = meter, name, bits

    def __enter__(self):
        self.meter.acquire(self.name, self.bits)
        return self

    def __exit__(self, *exc):
        self.meter.release(self.bits)
        return False


_NOOP = contextlib.nullcontext()


def charge(meter, name: str, bits: int):
    """Context manager charging ``bits`` of auxiliary space to ``meter`` (if any)."""
    return _NOOP if meter is None else _Register(meter, name, bits)


class ZeroGraphView:
    """Local access to the 0-graph of ``spec`` on input ``x``.

    ``S`` bounds walk lengths; ``B`` is the counter width used by the
    compress-or-compute layer.  Defaults are ``B = 2W`` and ``S = 2**B``.
    Incidence lists are memoised per vertex (bounded LRU); this caches the
    transition function only and never stores walk state.
    """

    def __init__(self, spec: MachineSpec, x: str | Sequence[int], *, B: int | None = None,
                 S: int | None = None, cache_size: int | None = 1 << 17):
        self.spec = spec
        self.x = as_bits(x)
        self.layout = Layout.for_machine(spec, len(self.x))
        self.B = 2 * self.layout.W if B is None else B
        self.S = 2**self.B if S is None else S
        if self.S < 1:
            raise ValueError("S must be positive")
        self.d_M = degree_bound(spec)
        self.index_bits = _width(self.d_M)
        self.touched = 0
        if cache_size == 0:
            self._incident = self._compute_incident
        else:
            self._incident = lru_cache(maxsize=cache_size)(self._compute_incident)

    # -- local structure ---------------------------------------------------

    def _compute_incident(self, v: Configuration) -> tuple[bool, tuple[Configuration, ...]]:
        self.touched += 1
        spec = self.spec
        nbrs = []
        forward = not spec.is_halting(v.state)
        if forward:
            nbrs.append(step(spec, self.x, v, 0))
        nbrs.extend(p for _, p in predecessors(spec, self.x, v, (0,)))
        return forward, tuple(nbrs)

    def incident(self, v: Configuration) -> tuple[bool, tuple[Configuration, ...]]:
        return self._incident(v)

    def deg(self, v: Configuration) -> int:
        return len(self._incident(v)[1])

    def is_halting(self, v: Configuration) -> bool:
        return self.spec.is_halting(v.state)

    @property
    def counter_bits(self) -> int:
        return self.S.bit_length()

    def edge_bits(self) -> int:
        return self.layout.W + self.index_bits

    # -- rotation map and walk primitives ----------------------------------

    def rot(self, e: EdgeRef) -> EdgeRef:
        v, i = e
        forward, nbrs = self._incident(v)
        if i >= len(nbrs):
            return e
        u = nbrs[i]
        if forward and i == 0:
            u_forward, u_nbrs = self._incident(u)
            for j in range(1 if u_forward else 0, len(u_nbrs)):
                if u_nbrs[j] == v:
                    return EdgeRef(u, j)
            raise AssertionError("forward edge missing from its endpoint's backward list")
        return EdgeRef(u, 0)

    def next_edge(self, e: EdgeRef) -> EdgeRef:
        u, j = self.rot(e)
        d = len(self._incident(u)[1])
        if d == 0:
            return EdgeRef(u, j)
        return EdgeRef(u, (j + 1) % d)

    def step_back(self, e: EdgeRef) -> EdgeRef:
        u, j = e
        d = len(self._incident(u)[1])
        if d == 0:
            return e
        return self.rot(EdgeRef(u, (j - 1) % d))

    def walk(self, e: EdgeRef, t: int, meter=None) -> EdgeRef:
        if not 0 <= t <= self.S:
            raise ValueError(f"walk length {t} outside [0, S={self.S}]")
        with charge(meter, "walk", self.edge_bits() + self.counter_bits):
            nxt = self.next_edge
            for _ in range(t):
                e = nxt(e)
        return e

    def count_steps_back(self, e: EdgeRef, meter=None, limit: int | None = None):
        """Steps back until ``(h, 0)`` for a halting ``h``; ``(INF, e')`` past the limit."""
        limit = self.S if limit is None else min(limit, self.S)
        spec = self.spec
        with charge(meter, "count_steps_back", self.edge_bits() + self.counter_bits):
            count = 0
            back = self.step_back
            while not (e.index == 0 and spec.is_halting(e.conf.state)):
                if count >= limit:
                    return INF, e
                e = back(e)
                count += 1
        return count, e

    def size(self, h: Configuration, meter=None):
        """Tour length of the tree rooted at halting ``h``; 1 if isolated, INF beyond S."""
        if not self.is_halting(h):
            raise ValueError("size is defined for halting configurations only")
        spec = self.spec
        with charge(meter, "size", self.edge_bits() + self.counter_bits):
            e = self.next_edge(EdgeRef(h, 0))
            t = 1
            # the tree holds exactly one halting vertex, so (h, 0) is recognised locally
            while not (e.index == 0 and spec.is_halting(e.conf.state)):
                if t >= self.S:
                    return INF
                e = self.next_edge(e)
                t += 1
        return t

    def conf_bit_at(self, h: Configuration, b: int, t: int, meter=None) -> int:
        if not self.is_halting(h):
            raise ValueError("conf_bit_at starts from a halting configuration")
        if not 0 <= b < self.layout.L:
            raise IndexError(f"bit {b} outside layout of length {self.layout.L}")
        with charge(meter, "conf_bit_at", self.layout.L.bit_length()):
            e = self.walk(EdgeRef(h, 0), t, meter)
            bit = self.layout.conf_bit(e.conf, b)
            # undo the walk so the caller's (h, t) are intact
            back = self.step_back
            for _ in range(t):
                e = back(e)
            assert e == EdgeRef(h, 0)
        return bit

    def canon(self, h: Configuration, i: int, t: int, meter=None) -> int:
        return int(self.walk(EdgeRef(h, i), t, meter).index == 0)

    def tour(self, h: Configuration, limit: int | None = None):
        """Edge slots of the Euler tour from ``(h, 0)`` in walk order (test helper)."""
        limit = self.S if limit is None else limit
        first = EdgeRef(h, 0)
        e = first
        for _ in range(limit):
            yield e
            e = self.next_edge(e)
            if e == first:
                return
        raise RuntimeError("tour exceeds limit")


def export_dot(view: ZeroGraphView, h: Configuration, limit: int = 1 << 16) -> str:
    """DOT rendering of the tree rooted at ``h``: hex serializations, canonical indices, slot labels."""
    layout = view.layout
    names = {}
    lines = [f'graph "{view.spec.name}" {{', "  node [shape=box, fontname=monospace];"]
    for t, e in enumerate(view.tour(h, limit)):
        if e.index == 0:
            names[e.conf] = f"v{t}"
            lines.append(f'  v{t} [label="{layout.to_hex(e.conf)}\\nidx {t}"];')
    for e in view.tour(h, limit):
        forward, _ = view.incident(e.conf)
        if forward and e.index == 0:
            u, j = view.rot(e)
            lines.append(f'  {names[e.conf]} -- {names[u]} [label="0/{j}", dir=forward];')
    lines.append("}")
    return "\n".join(lines) + "\n"
