"""Compress-or-compute on a virtual catalytic tape.

The virtual tape holds a ``c``-bit payload followed by ``k`` counter blocks
of ``B`` bits.  One round either explores both halting trees of the current
payload and emits their reachable graph, or walks ``ctr + 1`` steps into a
tree that is too large and replaces the counter with a short record from
which the walk can be undone.  Each compress round frees the record padding;
once enough padding is free, a brute-force search over scratch tapes is
guaranteed to hit a compute round.

Regions are tuples of tape positions.  Payload regions are read cell-wise
(position ``i`` is cell ``i``); counter regions are big-endian numbers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

from . import oracle
from .confgraph import INF, EdgeRef, ZeroGraphView, charge
from .machine import (Configuration, MachineSpec, Mode, PromiseViolation, Verdict, as_bits,
                      forward_edges, halting_configuration, start_configuration)

log = logging.getLogger(__name__)

Region = tuple[int, ...]


class TapeCorruption(RuntimeError):
    """A compress record could not be inverted; the tape changed between phases."""


class DriverIncomplete(RuntimeError):
    """The scratch search found no compute round (S too small for the completeness bound)."""


# ---------------------------------------------------------------------------
# space accounting


@dataclass
class SpaceMeter:
    """Declared auxiliary bits outside the virtual tape.

    Subroutines open registers with :func:`confgraph.charge`; the meter tracks
    the live total, its peak, and the peak seen while each register was open.
    """

    current: int = 0
    peak: int = 0
    breakdown: dict[str, int] = field(default_factory=dict)

    def acquire(self, name: str, bits: int) -> None:
        self.current += bits
        if self.current > self.peak:
            self.peak = self.current
        if self.current > self.breakdown.get(name, 0):
            self.breakdown[name] = self.current

    def release(self, bits: int) -> None:
        self.current -= bits
        assert self.current >= 0, "meter released more than it acquired"


# ---------------------------------------------------------------------------
# the tape


@dataclass
class VirtualTape:
    bits: bytearray
    c: int
    B: int
    k: int

    @classmethod
    def create(cls, c: int, tau: int, B: int, k: int, counters: Sequence[int] | None = None):
        if not 0 <= tau < 2**c:
            raise ValueError("payload does not fit c bits")
        counters = [0] * k if counters is None else list(counters)
        if len(counters) != k:
            raise ValueError(f"expected {k} counters, got {len(counters)}")
        tape = cls(bytearray(c + k * B), c, B, k)
        tape.set_cells(tape.payload, tau)
        for i, ctr in enumerate(counters):
            tape.set_number(tape.block(i), ctr)
        return tape

    @property
    def payload(self) -> Region:
        return tuple(range(self.c))

    def block(self, i: int) -> Region:
        if not 0 <= i < self.k:
            raise IndexError(f"block {i} outside [0, {self.k})")
        base = self.c + i * self.B
        return tuple(range(base, base + self.B))

    def __len__(self) -> int:
        return len(self.bits)

    def cells(self, region: Region) -> int:
        return sum(self.bits[p] << i for i, p in enumerate(region))

    def set_cells(self, region: Region, value: int) -> None:
        if value >> len(region):
            raise ValueError("value does not fit region")
        for i, p in enumerate(region):
            self.bits[p] = (value >> i) & 1

    def number(self, region: Region) -> int:
        value = 0
        for p in region:
            value = (value << 1) | self.bits[p]
        return value

    def set_number(self, region: Region, value: int) -> None:
        if value < 0 or value >> len(region):
            raise ValueError("value does not fit region")
        n = len(region)
        for i, p in enumerate(region):
            self.bits[p] = (value >> (n - 1 - i)) & 1

    def bitstring(self, region: Region) -> str:
        return "".join(str(self.bits[p]) for p in region)

    def snapshot(self) -> bytes:
        return bytes(self.bits)

    def counters(self) -> list[int]:
        return [self.number(self.block(i)) for i in range(self.k)]


@dataclass(frozen=True)
class CompressRecord:
    """Work part ``u`` (W bits), edge index ``j``, then zero padding up to ``B`` bits."""

    u: str
    j: int
    jbits: int
    B: int

    @property
    def padding(self) -> int:
        return self.B - len(self.u) - self.jbits

    def pack(self) -> str:
        j = format(self.j, f"0{self.jbits}b") if self.jbits else ""
        if len(j) != self.jbits:
            raise ValueError("edge index does not fit its field")
        return self.u + j + "0" * self.padding

    @classmethod
    def unpack(cls, bits: str, W: int, jbits: int) -> "CompressRecord":
        B = len(bits)
        if B - W - jbits < 1:
            raise ValueError("block too short for a compress record")
        j = int(bits[W:W + jbits], 2) if jbits else 0
        rec = cls(bits[:W], j, jbits, B)
        if "1" in bits[W + jbits:]:
            raise TapeCorruption("compress record padding is not zero")
        return rec


def padding_region(block: Region, W: int, jbits: int) -> Region:
    return block[W + jbits:]


def freed_bits(view: ZeroGraphView) -> int:
    return view.B - view.layout.W - view.index_bits


def block_count(view: ZeroGraphView) -> int:
    """Counter blocks needed so that all-compress rounds free ``c + B`` bits, plus one."""
    free = freed_bits(view)
    if free < 1:
        raise ValueError(
            f"counter width B={view.B} leaves no padding after W={view.layout.W} "
            f"and {view.index_bits} edge-index bits")
    return math.ceil((view.layout.c + view.B) / free) + 1


# ---------------------------------------------------------------------------
# explored graph


Node = tuple[int, int]


@dataclass
class ExploredGraph:
    """Labelled digraph over canonical indices ``(t, b)``; ``b`` is 0 for the accept tree, 1 for reject."""

    nodes: set[Node]
    edges: dict[tuple[Node, Node], frozenset]
    r: Node
    t: Node
    rej: Node | None
    S: int

    def successors(self, v: Node) -> list[tuple[frozenset, Node]]:
        return [(labels, b) for (a, b), labels in self.edges.items() if a == v]

    def adjacency(self) -> dict[Node, list[tuple[frozenset, Node]]]:
        adj: dict[Node, list] = {v: [] for v in self.nodes}
        for (a, b), labels in sorted(self.edges.items()):
            adj[a].append((labels, b))
        return adj


def halting_confs(spec: MachineSpec, tau: int) -> tuple[Configuration, Configuration]:
    if not 0 <= tau < 2**spec.c:
        raise ValueError("catalytic tape does not fit c bits")
    return halting_configuration(spec, tau, True), halting_configuration(spec, tau, False)


@dataclass(frozen=True)
class Computed:
    graph: ExploredGraph
    sizes: tuple[float, float]


@dataclass(frozen=True)
class Compressed:
    root_accept: bool
    steps: int
    record: CompressRecord
    sizes: tuple[float, float]


def _locate(view: ZeroGraphView, conf: Configuration, roots, limit: int, meter) -> Node | None:
    """Canonical index of ``conf`` in one of the two trees, found by stepping back to its root."""
    count, end = view.count_steps_back(EdgeRef(conf, 0), meter, limit)
    if count is INF:
        return None
    for b, h in enumerate(roots):
        if end.conf == h:
            return (count, b)
    return None


def _explore(view: ZeroGraphView, tau: int, roots, sizes, meter) -> ExploredGraph:
    spec, x, layout = view.spec, view.x, view.layout
    start_bits = layout.serialize(start_configuration(spec, tau))
    nodes: set[Node] = set()
    edges: dict[tuple[Node, Node], frozenset] = {}
    r = None
    limit = int(max(sizes)) - 1
    cb = view.counter_bits
    with charge(meter, "compute.cursor", 2 * cb + 1 + view.index_bits):
        for b, h in enumerate(roots):
            e = EdgeRef(h, 0)
            for i in range(int(sizes[b])):
                if i:
                    e = view.next_edge(e)
                if e.index:
                    continue
                node = (i, b)
                nodes.add(node)
                v = e.conf
                # the walk already holds the reached configuration, so compare it whole
                if r is None and layout.serialize(v) == start_bits:
                    r = node
                with charge(meter, "compute.successor", layout.W + view.index_bits + 2):
                    for labels, succ in forward_edges(spec, x, v):
                        target = _locate(view, succ, roots, limit, meter)
                        if target is not None:
                            edges[(node, target)] = edges.get((node, target), frozenset()) | labels
    if r is None:
        raise AssertionError("start configuration missing from both halting trees")
    return ExploredGraph(nodes, edges, r, (0, 0), (0, 1), view.S)


def compute_or_compress(view: ZeroGraphView, tape: VirtualTape, payload: Region, counter: Region,
                        meter: SpaceMeter | None = None) -> Computed | Compressed:
    """One round on ``(payload, counter)``.

    Both trees fit the walk bound: the payload and counter are left untouched
    and the reachable graph is returned.  Otherwise the walk from the large
    tree's root (accept preferred) runs ``ctr + 1`` steps, the payload becomes
    the reached catalytic contents and the counter becomes a record.
    """
    if len(counter) != view.B:
        raise ValueError("counter region must be B bits")
    tau = tape.cells(payload)
    roots = halting_confs(view.spec, tau)
    with charge(meter, "coc.sizes", 2 * view.counter_bits):
        sizes = (view.size(roots[0], meter), view.size(roots[1], meter))
        if sizes[0] is not INF and sizes[1] is not INF:
            return Computed(_explore(view, tau, roots, sizes, meter), sizes)
        root_accept = sizes[0] is INF
        h = roots[0] if root_accept else roots[1]
        ctr = tape.number(counter)
        if ctr + 1 > view.S:
            raise ValueError(f"counter {ctr} exceeds walk bound S-1={view.S - 1}")
        e = view.walk(EdgeRef(h, 0), ctr + 1, meter)
        if e.index == 0 and e.conf == h:
            raise AssertionError("walk returned to the root of an oversized tree")
        record = CompressRecord(view.layout.work_part(e.conf), e.index, view.index_bits, view.B)
        tape.set_cells(payload, e.conf.cat)
        for p, bit in zip(counter, record.pack()):
            tape.bits[p] = int(bit)
    return Compressed(root_accept, ctr + 1, record, sizes)


def _decompress(view: ZeroGraphView, tape: VirtualTape, payload: Region, counter: Region,
                meter: SpaceMeter | None = None) -> None:
    layout = view.layout
    record = CompressRecord.unpack(tape.bitstring(counter), layout.W, view.index_bits)
    try:
        conf = layout.join(record.u, tape.cells(payload))
    except ValueError as exc:
        raise TapeCorruption(f"compress record does not decode: {exc}") from None
    if record.j >= max(1, view.deg(conf)):
        raise TapeCorruption("edge index exceeds vertex degree")
    count, end = view.count_steps_back(EdgeRef(conf, record.j), meter)
    if count is INF or count == 0:
        raise TapeCorruption(f"step-back count {count} cannot encode a counter")
    if count - 1 >> view.B:
        raise TapeCorruption("recovered counter does not fit B bits")
    tape.set_cells(payload, end.conf.cat)
    tape.set_number(counter, count - 1)


def decompress_round(view: ZeroGraphView, tape: VirtualTape, i: int,
                     meter: SpaceMeter | None = None) -> None:
    """Undo compress round ``i``: payload and counter block ``i`` return to their prior values."""
    _decompress(view, tape, tape.payload, tape.block(i), meter)


# ---------------------------------------------------------------------------
# driver


@dataclass(frozen=True)
class RoundRecord:
    round: int | str
    branch: str
    acc_size: float | None = None
    rej_size: float | None = None
    freed: int = 0
    query_bits: int | None = None
    attempts: int | None = None

    def to_text(self) -> str:
        def show(v):
            return "inf" if v is INF else str(v)

        parts = [f"round={self.round}", f"branch={self.branch}"]
        if self.acc_size is not None:
            parts += [f"acc_size={show(self.acc_size)}", f"rej_size={show(self.rej_size)}"]
        if self.freed:
            parts.append(f"freed={self.freed}")
        if self.query_bits is not None:
            parts.append(f"query_bits={self.query_bits}")
        if self.attempts is not None:
            parts.append(f"attempts={self.attempts}")
        return " ".join(parts)


@dataclass
class DriverResult:
    verdict: Verdict
    tape: VirtualTape
    restored: bool
    trace: list[RoundRecord]
    meter: SpaceMeter
    graph: ExploredGraph
    query: "oracle.OracleQuery"


def _increment(tape: VirtualTape, region: Region) -> bool:
    """Binary increment in place over cells; returns False on wrap-around."""
    for p in region:
        if tape.bits[p]:
            tape.bits[p] = 0
        else:
            tape.bits[p] = 1
            return True
    return False


def make_view(spec: MachineSpec, x, *, B: int | None = None, S: int | None = None) -> ZeroGraphView:
    view = ZeroGraphView(spec, x, B=B, S=S)
    if view.S > 2**view.B:
        raise ValueError("S must not exceed 2**B")
    block_count(view)
    return view


def driver(spec: MachineSpec, x, tau: int, counters: Sequence[int] | None = None, *,
           B: int | None = None, S: int | None = None, unsafe_small_s: bool = False,
           mode: Mode | str | None = None, view: ZeroGraphView | None = None) -> DriverResult:
    """Deterministic decision of ``spec`` on ``x`` with catalytic payload ``tau``.

    PromiseViolation (bounded-random gap input) and DriverIncomplete are raised
    only after the tape has been restored; the exception carries ``restored``,
    ``tape`` and ``trace``.
    """
    x = as_bits(x)
    mode = spec.mode if mode is None else Mode(mode)
    if view is None:
        view = make_view(spec, x, B=B, S=S)
    W = view.layout.W
    if not unsafe_small_s and view.S < 2 ** (W + 3):
        raise ValueError(f"S={view.S} below the completeness bound 2^(W+3) for W={W}")
    k = block_count(view)
    tape = VirtualTape.create(spec.c, tau, view.B, k, counters)
    initial = tape.snapshot()
    meter = SpaceMeter()
    trace: list[RoundRecord] = []
    compressed: list[int] = []
    found: Computed | None = None
    scratch: Region = ()
    pending: Exception | None = None
    try:
        with charge(meter, "driver.round", k.bit_length()):
            for i in range(k):
                res = compute_or_compress(view, tape, tape.payload, tape.block(i), meter)
                if isinstance(res, Computed):
                    found = res
                    trace.append(RoundRecord(i, "compute", *res.sizes))
                    break
                compressed.append(i)
                trace.append(RoundRecord(i, "compress", *res.sizes, freed=res.record.padding))
            if found is None:
                free: list[int] = []
                for i in compressed:
                    free.extend(padding_region(tape.block(i), W, view.index_bits))
                assert len(free) >= spec.c + view.B, "freed padding below c + B"
                sc_payload = tuple(free[:spec.c])
                sc_counter = tuple(free[spec.c:spec.c + view.B])
                scratch = sc_payload + sc_counter
                attempts = 0
                with charge(meter, "driver.search", 1):
                    while True:
                        attempts += 1
                        tape.set_number(sc_counter, view.S - 1)
                        res = compute_or_compress(view, tape, sc_payload, sc_counter, meter)
                        if isinstance(res, Computed):
                            found = res
                            trace.append(RoundRecord("search", "compute", *res.sizes,
                                                     attempts=attempts))
                            break
                        _decompress(view, tape, sc_payload, sc_counter, meter)
                        if not _increment(tape, sc_payload):
                            trace.append(RoundRecord("search", "exhausted", attempts=attempts))
                            raise DriverIncomplete(
                                f"no scratch tape of {2**spec.c} gave a compute round at S={view.S}")
            query = oracle.OracleQuery(found.graph, mode)
            qbits = oracle.query_bits(found.graph)
            log.info("oracle query: %d nodes, %d edges, %d bits",
                     len(found.graph.nodes), len(found.graph.edges), qbits)
            trace[-1] = RoundRecord(trace[-1].round, trace[-1].branch, trace[-1].acc_size,
                                    trace[-1].rej_size, trace[-1].freed, qbits, trace[-1].attempts)
            verdict = oracle.decide(query)
    except (PromiseViolation, DriverIncomplete) as exc:
        pending = exc
    finally:
        for p in scratch:
            tape.bits[p] = 0
        for i in reversed(compressed):
            decompress_round(view, tape, i, meter)
            trace.append(RoundRecord(i, "decompress"))
    restored = tape.snapshot() == initial
    if pending is not None:
        pending.restored, pending.tape, pending.trace = restored, tape, trace
        raise pending
    return DriverResult(verdict, tape, restored, trace, meter, found.graph, query)


__all__ = [
    "CompressRecord", "Computed", "Compressed", "DriverIncomplete", "DriverResult",
    "ExploredGraph", "RoundRecord", "SpaceMeter", "TapeCorruption",
    "VirtualTape", "block_count", "compute_or_compress", "decompress_round", "driver",
    "freed_bits", "halting_confs", "make_view", "padding_region",
]
