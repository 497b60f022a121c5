"""Named machines used by the CLI, the sweeps and the test-suite.

Every builder takes the catalytic length ``c`` and picks the smallest work
length with ``c <= 2**s``.  Machines never depend on ``tau`` for their
verdict, so the driver may answer from any tape it settles on.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Hashable

from .machine import ChoiceOutcome, MachineSpec, Mode, table_index

Reads = tuple[int, int, int]  # input bit, work bit, cat bit


@dataclass(frozen=True)
class Go:
    """One choice outcome; ``None`` writes put back the bit that was read."""

    to: Hashable
    work: int | None = None
    cat: int | None = None
    din: int = 0
    dwork: int = 0
    dcat: int = 0


class Builder:
    def __init__(self, name: str, mode: Mode, c: int, s: int | None = None):
        self.name = name
        self.mode = mode
        self.c = c
        self.s = max(1, (c - 1).bit_length()) if s is None else s
        self.states: list[Hashable] = ["start", "accept", "reject"]
        self.rules: dict[Hashable, Callable[[Reads], tuple[Go, Go] | Go]] = {}

    def add(self, state: Hashable, rule: Callable[[Reads], tuple[Go, Go] | Go]) -> None:
        if state not in self.states:
            self.states.append(state)
        self.rules[state] = rule

    def always(self, state: Hashable, go: Go | tuple[Go, Go]) -> None:
        self.add(state, lambda reads: go)

    def build(self) -> MachineSpec:
        names = [_name(q) for q in self.states]
        index = {q: i for i, q in enumerate(self.states)}
        table: list = [None] * (8 * len(self.states))
        for q, rule in self.rules.items():
            for a, w, g in product((0, 1), repeat=3):
                res = rule((a, w, g))
                pair = res if isinstance(res, tuple) else (res, res)
                table[table_index(index[q], a, w, g)] = tuple(
                    ChoiceOutcome(index[go.to],
                                  w if go.work is None else go.work,
                                  g if go.cat is None else go.cat,
                                  go.din, go.dwork, go.dcat)
                    for go in pair)
        return MachineSpec(self.name, self.mode, self.s, self.c, tuple(names),
                           index["accept"], index["reject"], tuple(table))


def _name(q: Hashable) -> str:
    if isinstance(q, str):
        return q
    return "_".join(str(part) for part in q)


# ---------------------------------------------------------------------------
# machines


def identity_machine(c: int = 4) -> MachineSpec:
    """M_id: start moves straight to accept."""
    b = Builder("M_id", Mode.DETERMINISTIC, c)
    b.always("start", Go("accept"))
    return b.build()


def flip_machine(c: int = 4) -> MachineSpec:
    """M_flip: flips cat[0], flips it back, accepts."""
    b = Builder("M_flip", Mode.DETERMINISTIC, c)
    b.add("start", lambda r: Go("back", cat=1 - r[2]))
    b.add("back", lambda r: Go("accept", cat=1 - r[2]))
    return b.build()


def coin_machine(c: int = 4) -> MachineSpec:
    """COIN: one random bit decides."""
    b = Builder("COIN", Mode.UNBOUNDED, c)
    b.always("start", (Go("accept"), Go("reject")))
    return b.build()


def parity_machine(c: int = 4, n: int = 3) -> MachineSpec:
    """PARITY: accepts inputs with an odd number of ones."""
    b = Builder("PARITY", Mode.DETERMINISTIC, c)

    def scan(pos, par):
        def rule(r):
            p = par ^ r[0]
            if pos == n - 1:
                if pos == 0:
                    return Go("accept" if p else "reject")
                return Go(("ret", pos - 1, p), din=-1)
            return Go(("scan", pos + 1, p), din=1)
        return rule

    def ret(pos, par):
        if pos == 0:
            return Go("accept" if par else "reject")
        return Go(("ret", pos - 1, par), din=-1)

    b.add("start", scan(0, 0))
    for pos in range(1, n):
        for par in (0, 1):
            b.add(("scan", pos, par), scan(pos, par))
    for pos in range(n - 1):
        for par in (0, 1):
            b.always(("ret", pos, par), ret(pos, par))
    return b.build()


def touch_machine(c: int = 4) -> MachineSpec:
    """TOUCH: moves all three heads and scribbles on both tapes, then cleans up.

    Copies cat[0] to work[0] and cat[1] to work[1], XORs x[0] into cat[1] and
    back, wipes the work tape and accepts iff x[0] == 1.
    """
    if c < 2:
        raise ValueError("TOUCH needs c >= 2")
    b = Builder("TOUCH", Mode.DETERMINISTIC, c, s=max(2, (c - 1).bit_length()))
    b.add("start", lambda r: Go("copy1", work=r[2], dwork=1, dcat=1))
    b.add("copy1", lambda r: Go("mix", work=r[2], cat=r[2] ^ r[0]))
    b.add("mix", lambda r: Go("wipe1", cat=r[2] ^ r[0], din=1))
    b.add("wipe1", lambda r: Go("wipe0", work=0, din=-1, dwork=-1, dcat=-1))
    b.add("wipe0", lambda r: Go("accept" if r[0] else "reject", work=0))
    return b.build()


# 4-node undirected graph: edge bits at input positions 0..5
EDGE_POSITIONS = {(0, 1): 0, (0, 2): 1, (0, 3): 2, (1, 2): 3, (1, 3): 4, (2, 3): 5}
# every simple 0 -> 3 path, as sorted input positions of its edges
STCONN_PATHS = ((2,), (0, 4), (1, 5), (0, 3, 5), (1, 3, 4))


def _stconn(name: str, mode: Mode, c: int, found: str, missing: str) -> MachineSpec:
    b = Builder(name, mode, c)
    # three nondeterministic guesses pick one of the five paths (or none)
    guesses = ["start", ("g", 0), ("g", 1), ("g", 0, 0), ("g", 0, 1), ("g", 1, 0), ("g", 1, 1)]
    for q in guesses:
        prefix = () if q == "start" else q[1:]
        if len(prefix) < 2:
            b.always(q, (Go(("g",) + prefix + (0,)), Go(("g",) + prefix + (1,))))
        else:
            targets = []
            for bit in (0, 1):
                k = prefix[0] * 4 + prefix[1] * 2 + bit
                targets.append(Go(("chk", k, 0)) if k < len(STCONN_PATHS) else Go(missing))
            b.always(q, tuple(targets))
    for k, path in enumerate(STCONN_PATHS):
        last = path[-1]
        for pos in range(last + 1):
            def rule(r, pos=pos, path=path, last=last, k=k):
                if pos not in path:
                    return Go(("chk", k, pos + 1), din=1)
                if not r[0]:
                    return Go(("ret", missing, pos))
                if pos == last:
                    return Go(("ret", found, pos))
                return Go(("chk", k, pos + 1), din=1)
            b.add(("chk", k, pos), rule)
    for outcome in (found, missing):
        for pos in range(6):
            b.always(("ret", outcome, pos),
                     Go(outcome) if pos == 0 else Go(("ret", outcome, pos - 1), din=-1))
    return b.build()


def stconn_machine(c: int = 6) -> MachineSpec:
    """ND-STCONN: guesses a 0 -> 3 path in a 4-node graph and checks its edges."""
    return _stconn("ND-STCONN", Mode.NONDET, c, "accept", "reject")


def co_stconn_machine(c: int = 6) -> MachineSpec:
    """CO-ND-STCONN: rejects on a verified 0 -> 3 path, so it accepts disconnected graphs."""
    return _stconn("CO-ND-STCONN", Mode.CONONDET, c, "reject", "accept")


def majority_machine(c: int = 4) -> MachineSpec:
    """MAJ3: majority of three votes drawn with three random choices.

    Input ``f0 v0 f1 v1``: vote 0 is forced to ``v0`` when ``f0`` is set and
    random otherwise, likewise vote 1; vote 2 is always random.
    """
    b = Builder("MAJ3", Mode.BOUNDED, c)
    for depth in range(4):
        for seen in product((0, 1), repeat=depth):
            q = "start" if depth == 0 else ("rd",) + seen
            if depth < 3:
                b.add(q, lambda r, seen=seen: Go(("rd",) + seen + (r[0],), din=1))
            else:
                b.add(q, lambda r, seen=seen: Go(("v0",) + seen + (r[0],)))
    for f0, v0, f1, v1 in product((0, 1), repeat=4):
        def vote0(r, f0=f0, v0=v0, f1=f1, v1=v1):
            outs = tuple(Go(("v1", f1, v1, v0 if f0 else ch), din=-1) for ch in (0, 1))
            return outs
        b.add(("v0", f0, v0, f1, v1), vote0)
    for f1, v1, cnt in product((0, 1), (0, 1), (0, 1)):
        b.add(("v1", f1, v1, cnt),
              lambda r, f1=f1, v1=v1, cnt=cnt: tuple(
                  Go(("v2", cnt + (v1 if f1 else ch)), din=-1) for ch in (0, 1)))
    for cnt in range(3):
        b.add(("v2", cnt), lambda r, cnt=cnt: tuple(
            Go("accept" if cnt + ch >= 2 else "reject", din=-1) for ch in (0, 1)))
    return b.build()


def chain_machine(length: int, c: int = 4, pad_to: int | None = None) -> MachineSpec:
    """CHAIN: start -> q1 -> ... -> q_{length-1} -> accept; accept tree has ``length+1`` vertices.

    ``pad_to`` adds self-looping unreachable states so the state field width
    stays fixed across a sweep over ``length``.
    """
    b = Builder(f"CHAIN{length}", Mode.DETERMINISTIC, c)
    chain = ["start"] + [("q", i) for i in range(1, length)]
    for here, there in zip(chain, chain[1:] + ["accept"]):
        b.always(here, Go(there))
    if pad_to is not None:
        for i in range(len(b.states), pad_to):
            b.always(("pad", i), Go(("pad", i)))
    return b.build()


def catscan_machine(c: int = 4) -> MachineSpec:
    """CATSCAN: walks right over the leading ones of the catalytic tape, walks back, accepts.

    Its 0-trees grow with the run of leading ones, which makes component sizes
    depend on the tape.
    """
    b = Builder("CATSCAN", Mode.DETERMINISTIC, c)

    def scan(pos):
        def rule(r):
            if r[2] and pos < c - 1:
                return Go(("scan", pos + 1), dcat=1)
            return Go(("back", pos))
        return rule

    b.add("start", scan(0))
    for pos in range(1, c):
        b.add(("scan", pos), scan(pos))
    for pos in range(c):
        b.always(("back", pos), Go("accept") if pos == 0 else Go(("back", pos - 1), dcat=-1))
    return b.build()


def loop_machine(c: int = 4) -> MachineSpec:
    """LOOP (invalid): start steps to itself forever."""
    b = Builder("LOOP", Mode.DETERMINISTIC, c)
    b.always("start", Go("start"))
    return b.build()


def smash_machine(c: int = 4) -> MachineSpec:
    """SMASH (invalid): flips cat[0] and accepts without restoring it."""
    b = Builder("SMASH", Mode.DETERMINISTIC, c)
    b.add("start", lambda r: Go("accept", cat=1 - r[2]))
    return b.build()


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    build: Callable[[int], MachineSpec]
    inputs: tuple[str, ...]
    valid: bool = True
    default_c: int = 4


STCONN_INPUTS = ("001000", "110011", "010110", "100001", "100100")

CORPUS: dict[str, CorpusEntry] = {
    e.name: e
    for e in [
        CorpusEntry("M_id", identity_machine, ("00",)),
        CorpusEntry("M_flip", flip_machine, ("00",)),
        CorpusEntry("COIN", coin_machine, ("0",)),
        CorpusEntry("PARITY", parity_machine, ("000", "101", "111")),
        CorpusEntry("TOUCH", touch_machine, ("01", "10")),
        # direct edge, 4-cycle 0-1-3-2-0, path 0-2-1-3, two disconnected graphs
        CorpusEntry("ND-STCONN", stconn_machine, STCONN_INPUTS, default_c=6),
        CorpusEntry("CO-ND-STCONN", co_stconn_machine, STCONN_INPUTS, default_c=6),
        # p = 3/4, 1/4, 1, 0
        CorpusEntry("MAJ3", majority_machine, ("1100", "1000", "1111", "1010")),
        CorpusEntry("CATSCAN", catscan_machine, ("0",)),
        CorpusEntry("LOOP", loop_machine, ("0",), valid=False),
        CorpusEntry("SMASH", smash_machine, ("0",), valid=False),
    ]
}


def corpus() -> dict[str, CorpusEntry]:
    return dict(CORPUS)


def get_machine(name: str, c: int | None = None) -> MachineSpec:
    try:
        entry = CORPUS[name]
    except KeyError:
        raise KeyError(f"unknown corpus machine {name!r}; known: {', '.join(CORPUS)}") from None
    return entry.build(entry.default_c if c is None else c)
