"""Catalytic Turing machine model, machine documents and reference semantics.

A machine has a read-only input tape, an ``s``-bit work tape and a ``c``-bit
catalytic tape.  Every non-halting step offers a 0-choice and a 1-choice; in
deterministic mode the two coincide.  Configurations keep the control state
and the three head positions as explicit fields.

Tape contents are stored as integers with cell ``i`` in bit ``i``.
"""

from __future__ import annotations

import enum
import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

ZERO = frozenset({0})
ONE = frozenset({1})
BOTH = frozenset({0, 1})


class MachineError(ValueError):
    """Base class for malformed machine descriptions."""


class MachineSyntaxError(MachineError):
    def __init__(self, line: int, field: str, message: str):
        super().__init__(f"line {line}: {field}: {message}")
        self.line = line
        self.field = field


class MachineSemanticError(MachineError):
    pass


class InvalidMachineError(RuntimeError):
    """Raised when reference semantics are requested for an invalid run."""

    def __init__(self, report: "ValidityReport"):
        super().__init__(f"machine is not valid on this tape: {report.problem}")
        self.report = report


class PromiseViolation(RuntimeError):
    """Bounded-error acceptance probability fell strictly between 1/3 and 2/3."""

    def __init__(self, probability: Fraction):
        super().__init__(f"acceptance probability {probability} violates the bounded-error promise")
        self.probability = probability


class Mode(str, enum.Enum):
    DETERMINISTIC = "deterministic"
    NONDET = "nondet"
    CONONDET = "co-nondet"
    BOUNDED = "bounded-random"
    UNBOUNDED = "unbounded-random"

    @property
    def randomized(self) -> bool:
        return self in (Mode.BOUNDED, Mode.UNBOUNDED)


class Outcome(str, enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"


class ChoiceOutcome(NamedTuple):
    next_state: int
    work_write: int
    cat_write: int
    input_move: int
    work_move: int
    cat_move: int


class Configuration(NamedTuple):
    state: int
    input_head: int
    work_head: int
    cat_head: int
    work: int
    cat: int


def table_index(state: int, input_bit: int, work_bit: int, cat_bit: int) -> int:
    return (state << 3) | (input_bit << 2) | (work_bit << 1) | cat_bit


@dataclass(frozen=True)
class MachineSpec:
    """Immutable machine description.

    ``states[0]`` is the start state.  ``table`` holds one entry per
    ``(state, input_bit, work_bit, cat_bit)`` in :func:`table_index` order:
    a pair of outcomes for the 0- and 1-choice, or ``None`` for halting states.
    """

    name: str
    mode: Mode
    s: int
    c: int
    states: tuple[str, ...]
    accept: int
    reject: int
    table: tuple[tuple[ChoiceOutcome, ChoiceOutcome] | None, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.s < 1 or self.c < 1:
            raise MachineSemanticError("tape lengths s and c must be positive")
        if self.c > 2**self.s:
            raise MachineSemanticError(f"catalytic length c={self.c} exceeds 2^s={2**self.s}")
        if len(set(self.states)) != len(self.states):
            raise MachineSemanticError("duplicate state names")
        q = len(self.states)
        if not (0 < self.accept < q and 0 < self.reject < q) or self.accept == self.reject:
            raise MachineSemanticError("accept and reject must be distinct non-start states")
        if len(self.table) != 8 * q:
            raise MachineSemanticError("transition table has the wrong size")
        for key, entry in enumerate(self.table):
            state = key >> 3
            where = f"{self.states[state]} {(key >> 2) & 1}{(key >> 1) & 1}{key & 1}"
            if state in (self.accept, self.reject):
                if entry is not None:
                    raise MachineSemanticError(f"halting state has a transition: {where}")
                continue
            if entry is None:
                raise MachineSemanticError(f"missing transition: {where}")
            for o in entry:
                if not 0 <= o.next_state < q:
                    raise MachineSemanticError(f"unknown next state in {where}")
                if o.work_write not in (0, 1) or o.cat_write not in (0, 1):
                    raise MachineSemanticError(f"writes must be bits in {where}")
                if {o.input_move, o.work_move, o.cat_move} - {-1, 0, 1}:
                    raise MachineSemanticError(f"head moves must be in {{-1,0,1}} in {where}")
            if self.mode is Mode.DETERMINISTIC and entry[0] != entry[1]:
                raise MachineSemanticError(f"deterministic machine has distinct choices in {where}")

    @property
    def start(self) -> int:
        return 0

    def is_halting(self, state: int) -> bool:
        return state == self.accept or state == self.reject

    def outcomes(self, state: int, input_bit: int, work_bit: int, cat_bit: int):
        return self.table[table_index(state, input_bit, work_bit, cat_bit)]

    @cached_property
    def preimages(self) -> dict[int, list]:
        """Table entries grouped by next state (computed once per spec)."""
        index: dict[int, list] = {}
        for key, entry in enumerate(self.table):
            if entry is None:
                continue
            state, a, w, g = key >> 3, (key >> 2) & 1, (key >> 1) & 1, key & 1
            for choice, o in enumerate(entry):
                index.setdefault(o.next_state, []).append((state, a, w, g, choice, o))
        return index

    def with_mode(self, mode: Mode | str) -> "MachineSpec":
        return MachineSpec(self.name, Mode(mode), self.s, self.c, self.states,
                           self.accept, self.reject, self.table)


# ---------------------------------------------------------------------------
# bit helpers


def as_bits(x: str | Sequence[int]) -> tuple[int, ...]:
    if isinstance(x, str):
        if set(x) - {"0", "1"}:
            raise ValueError(f"not a bit string: {x!r}")
        return tuple(int(ch) for ch in x)
    return tuple(int(b) for b in x)


def pack_cells(bits: str | Sequence[int]) -> int:
    """Cell-ordered bits (cell 0 first) to the integer tape representation."""
    return sum(b << i for i, b in enumerate(as_bits(bits)))


def unpack_cells(value: int, width: int) -> str:
    return "".join(str((value >> i) & 1) for i in range(width))


def start_configuration(spec: MachineSpec, tau: int) -> Configuration:
    return Configuration(spec.start, 0, 0, 0, 0, tau)


def halting_configuration(spec: MachineSpec, tau: int, accept: bool) -> Configuration:
    return Configuration(spec.accept if accept else spec.reject, 0, 0, 0, 0, tau)


def is_canonical_halt(spec: MachineSpec, conf: Configuration) -> bool:
    return (spec.is_halting(conf.state) and conf.input_head == 0 and conf.work_head == 0
            and conf.cat_head == 0 and conf.work == 0)


# ---------------------------------------------------------------------------
# small-step semantics


def _clamp(pos: int, move: int, length: int) -> int:
    new = pos + move
    return new if 0 <= new < length else pos


def step(spec: MachineSpec, x: Sequence[int], conf: Configuration, choice: int) -> Configuration:
    state, ih, wh, ch, work, cat = conf
    if state == spec.accept or state == spec.reject:
        raise ValueError("cannot step a halting configuration")
    w = (work >> wh) & 1
    g = (cat >> ch) & 1
    o = spec.table[(state << 3) | (x[ih] << 2) | (w << 1) | g][choice]
    return Configuration(
        o.next_state,
        _clamp(ih, o.input_move, len(x)),
        _clamp(wh, o.work_move, spec.s),
        _clamp(ch, o.cat_move, spec.c),
        work ^ ((w ^ o.work_write) << wh),
        cat ^ ((g ^ o.cat_write) << ch),
    )


def forward_edges(spec: MachineSpec, x: Sequence[int], conf: Configuration):
    """Outgoing edges as ``(labels, successor)``; labels merge when both choices agree."""
    if spec.is_halting(conf.state):
        return []
    s0 = step(spec, x, conf, 0)
    s1 = step(spec, x, conf, 1)
    if s0 == s1:
        return [(BOTH, s0)]
    return [(ZERO, s0), (ONE, s1)]


def _preimage_index(spec: MachineSpec) -> dict[int, list]:
    return spec.preimages


def _origins(pos: int, move: int, length: int) -> list[int]:
    """Head positions that land on ``pos`` after ``move`` with clamping."""
    if move == 0:
        return [pos]
    found = []
    prev = pos - move
    if 0 <= prev < length:
        found.append(prev)
    if not 0 <= pos + move < length:
        found.append(pos)
    return found


def predecessors(spec: MachineSpec, x: Sequence[int], conf: Configuration,
                 choices: Iterable[int] = (0, 1)) -> list[tuple[frozenset, Configuration]]:
    """Inverse edges restricted to the given choices, in canonical descriptor order."""
    choices = tuple(choices)
    state, ih, wh, ch, work, cat = conf
    found: dict[tuple, list] = {}
    for pstate, a, w, g, choice, o in _preimage_index(spec).get(state, ()):
        if choice not in choices:
            continue
        for pih in _origins(ih, o.input_move, len(x)):
            if x[pih] != a:
                continue
            for pwh in _origins(wh, o.work_move, spec.s):
                if (work >> pwh) & 1 != o.work_write:
                    continue
                for pch in _origins(ch, o.cat_move, spec.c):
                    if (cat >> pch) & 1 != o.cat_write:
                        continue
                    pred = Configuration(pstate, pih, pwh, pch,
                                         work ^ ((w ^ o.work_write) << pwh),
                                         cat ^ ((g ^ o.cat_write) << pch))
                    if step(spec, x, pred, choice) != conf:
                        continue
                    desc = (pstate, ih - pih, wh - pwh, ch - pch, w, g)
                    slot = found.setdefault(desc, [pred, set()])
                    slot[1].add(choice)
    return [(frozenset(found[d][1]), found[d][0]) for d in sorted(found)]


def inverse_edges(spec: MachineSpec, x: Sequence[int], conf: Configuration):
    return predecessors(spec, x, conf, (0, 1))


def degree_bound(spec: MachineSpec) -> int:
    """Static bound on in-degree plus out-degree of any configuration.

    Predecessor descriptors are grouped by (predecessor state, head
    displacements); one group pins a single cell of the current work and
    catalytic tape, so at most the descriptors agreeing on those two written
    bits can match at once.  Groups constrain different cells and add up.
    """
    per_target: dict[int, dict[tuple, dict[tuple, set]]] = {}
    for key, entry in enumerate(spec.table):
        if entry is None:
            continue
        state, w, g = key >> 3, (key >> 1) & 1, key & 1
        for o in entry:
            groups = per_target.setdefault(o.next_state, {})
            for din in {o.input_move, 0}:
                for dwk in {o.work_move, 0}:
                    for dct in {o.cat_move, 0}:
                        written = groups.setdefault((state, din, dwk, dct), {})
                        written.setdefault((o.work_write, o.cat_write), set()).add((w, g))
    in_bound = 0
    for groups in per_target.values():
        total = sum(max(len(v) for v in written.values()) for written in groups.values())
        in_bound = max(in_bound, total)
    return in_bound + 2


# ---------------------------------------------------------------------------
# exploration and reference semantics


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    reachable: int
    problem: str | None = None
    witness: tuple[Configuration, ...] = ()

    def to_text(self, layout=None) -> str:
        lines = [f"valid={'yes' if self.valid else 'no'}", f"reachable={self.reachable}"]
        if self.problem:
            lines.append(f"problem={self.problem}")
        for i, conf in enumerate(self.witness):
            shown = layout.serialize(conf) if layout is not None else tuple(conf)
            lines.append(f"witness[{i}]={shown}")
        return "\n".join(lines)


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    probability: Fraction | None = None

    @property
    def accepted(self) -> bool:
        return self.outcome is Outcome.ACCEPT

    def to_text(self) -> str:
        text = f"outcome={self.outcome.value}"
        if self.probability is not None:
            text += f" probability={self.probability}"
        return text


def explore(spec: MachineSpec, x: Sequence[int], tau: int, limit: int = 1 << 22):
    """Reachable configuration graph from the start configuration over ``tau``."""
    x = as_bits(x)
    start = start_configuration(spec, tau)
    graph = {start: forward_edges(spec, x, start)}
    queue = deque([start])
    while queue:
        for _, nxt in graph[queue.popleft()]:
            if nxt not in graph:
                if len(graph) >= limit:
                    raise RuntimeError("reachable set exceeds exploration limit")
                graph[nxt] = forward_edges(spec, x, nxt)
                queue.append(nxt)
    return graph


def _find_cycle(graph, start) -> list[Configuration] | None:
    color: dict[Configuration, int] = {start: 1}
    path = [start]
    iters = [iter(graph[start])]
    while iters:
        try:
            _, nxt = next(iters[-1])
        except StopIteration:
            color[path.pop()] = 2
            iters.pop()
            continue
        mark = color.get(nxt, 0)
        if mark == 1:
            return path + [nxt]
        if mark == 0:
            color[nxt] = 1
            path.append(nxt)
            iters.append(iter(graph[nxt]))
    return None


def _path_to(graph, start, target) -> list[Configuration]:
    parent = {start: None}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        if v == target:
            break
        for _, nxt in graph[v]:
            if nxt not in parent:
                parent[nxt] = v
                queue.append(nxt)
    path = []
    v = target
    while v is not None:
        path.append(v)
        v = parent[v]
    return path[::-1]


def validate(spec: MachineSpec, x: Sequence[int], tau: int, graph=None) -> ValidityReport:
    if not 0 <= tau < 2**spec.c:
        raise ValueError("catalytic tape does not fit c bits")
    x = as_bits(x)
    graph = explore(spec, x, tau) if graph is None else graph
    start = start_configuration(spec, tau)
    cycle = _find_cycle(graph, start)
    if cycle is not None:
        return ValidityReport(False, len(graph), "cycle", tuple(cycle))
    for conf, out in graph.items():
        if out:
            continue
        if not is_canonical_halt(spec, conf):
            return ValidityReport(False, len(graph), "non-canonical halt",
                                  tuple(_path_to(graph, start, conf)))
        if conf.cat != tau:
            return ValidityReport(False, len(graph), "catalytic tape not restored",
                                  tuple(_path_to(graph, start, conf)))
    return ValidityReport(True, len(graph))


def _topological(graph, start) -> list[Configuration]:
    order = []
    seen = {start}
    stack = [(start, iter(graph[start]))]
    while stack:
        v, it = stack[-1]
        for _, nxt in it:
            if nxt not in seen:
                seen.add(nxt)
                stack.append((nxt, iter(graph[nxt])))
                break
        else:
            stack.pop()
            order.append(v)
    return order  # sinks first


def acceptance_probabilities(spec: MachineSpec, graph, start) -> dict[Configuration, Fraction]:
    prob: dict[Configuration, Fraction] = {}
    half = Fraction(1, 2)
    for v in _topological(graph, start):
        out = graph[v]
        if not out:
            prob[v] = Fraction(int(v.state == spec.accept))
        elif len(out) == 1:
            prob[v] = prob[out[0][1]]
        else:
            prob[v] = half * prob[out[0][1]] + half * prob[out[1][1]]
    return prob


def threshold_verdict(mode: Mode, p: Fraction) -> Verdict:
    if mode is Mode.BOUNDED:
        if Fraction(1, 3) < p < Fraction(2, 3):
            raise PromiseViolation(p)
        return Verdict(Outcome.ACCEPT if p >= Fraction(2, 3) else Outcome.REJECT, p)
    return Verdict(Outcome.ACCEPT if p > Fraction(1, 2) else Outcome.REJECT, p)


def brute_semantics(spec: MachineSpec, x: Sequence[int], tau: int, mode: Mode | None = None) -> Verdict:
    """Verdict by full exploration of the reachable configuration DAG."""
    mode = spec.mode if mode is None else Mode(mode)
    x = as_bits(x)
    graph = explore(spec, x, tau)
    report = validate(spec, x, tau, graph)
    if not report.valid:
        raise InvalidMachineError(report)
    acc = halting_configuration(spec, tau, True)
    rej = halting_configuration(spec, tau, False)
    if mode in (Mode.DETERMINISTIC, Mode.NONDET):
        return Verdict(Outcome.ACCEPT if acc in graph else Outcome.REJECT)
    if mode is Mode.CONONDET:
        return Verdict(Outcome.REJECT if rej in graph else Outcome.ACCEPT)
    start = start_configuration(spec, tau)
    p = acceptance_probabilities(spec, graph, start)[start]
    return threshold_verdict(mode, p)


def simulate(spec: MachineSpec, x: Sequence[int], tau: int, choices=None, max_steps: int = 1 << 20):
    """Run one computation path; ``choices`` defaults to all zeros."""
    x = as_bits(x)
    conf = start_configuration(spec, tau)
    it = iter(choices) if choices is not None else None
    for _ in range(max_steps):
        if spec.is_halting(conf.state):
            return conf
        conf = step(spec, x, conf, next(it) if it is not None else 0)
    raise RuntimeError("step budget exhausted")


# ---------------------------------------------------------------------------
# machine documents

_HEADER_KEYS = ("name", "mode", "work", "catalytic", "states", "start", "accept", "reject")
_MOVES = {"-1": -1, "0": 0, "+1": 1, "1": 1, "L": -1, "S": 0, "R": 1}


def _parse_outcome(tokens: list[str], lineno: int, reads: tuple[int, int, int]):
    if len(tokens) != 6:
        raise MachineSyntaxError(lineno, "outcome", "expected: next work_write cat_write in_move work_move cat_move")
    nxt, ww, cw, *moves = tokens

    def write(tok: str, read: int, field: str) -> int:
        if tok in ("0", "1"):
            return int(tok)
        if tok == "=":
            return read
        if tok == "~":
            return 1 - read
        raise MachineSyntaxError(lineno, field, f"bad write symbol {tok!r}")

    parsed = []
    for tok, field in zip(moves, ("input_move", "work_move", "cat_move")):
        if tok not in _MOVES:
            raise MachineSyntaxError(lineno, field, f"bad move {tok!r}")
        parsed.append(_MOVES[tok])
    return nxt, write(ww, reads[1], "work_write"), write(cw, reads[2], "cat_write"), parsed


def parse_machine(text: str) -> MachineSpec:
    """Parse a machine document; see ``machines/README.md`` for the grammar."""
    header: dict[str, tuple[int, str]] = {}
    records: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("delta"):
            records.append((lineno, line.split()[1:]))
            continue
        m = re.fullmatch(r"([a-z]+)\s*:\s*(.*)", line)
        if not m:
            raise MachineSyntaxError(lineno, "line", f"unrecognised line {raw!r}")
        key, value = m.groups()
        if key not in _HEADER_KEYS:
            raise MachineSyntaxError(lineno, key, "unknown header key")
        if key in header:
            raise MachineSyntaxError(lineno, key, "duplicate header key")
        header[key] = (lineno, value.strip())
    for key in _HEADER_KEYS:
        if key not in header:
            raise MachineSyntaxError(0, key, "missing header key")

    def integer(key: str) -> int:
        lineno, value = header[key]
        if not value.isdigit():
            raise MachineSyntaxError(lineno, key, f"expected a non-negative integer, got {value!r}")
        return int(value)

    lineno, mode_text = header["mode"]
    try:
        mode = Mode(mode_text)
    except ValueError:
        raise MachineSyntaxError(lineno, "mode", f"unknown mode {mode_text!r}") from None
    names = header["states"][1].split()
    role = {}
    for key in ("start", "accept", "reject"):
        lineno, value = header[key]
        if value not in names:
            raise MachineSyntaxError(lineno, key, f"undeclared state {value!r}")
        role[key] = value
    ordered = [role["start"]] + [q for q in names if q != role["start"]]
    index = {q: i for i, q in enumerate(ordered)}

    table: list = [None] * (8 * len(ordered))
    for lineno, tokens in records:
        if len(tokens) < 5 or tokens[4] != "->":
            raise MachineSyntaxError(lineno, "delta", "expected: delta state in work cat -> outcome [| outcome]")
        state, *reads = tokens[:4]
        if state not in index:
            raise MachineSyntaxError(lineno, "state", f"undeclared state {state!r}")
        if state in (role["accept"], role["reject"]):
            raise MachineSemanticError(f"line {lineno}: halting state {state!r} has a transition")
        for tok, field in zip(reads, ("input_bit", "work_bit", "cat_bit")):
            if tok not in ("0", "1", "*"):
                raise MachineSyntaxError(lineno, field, f"bad read symbol {tok!r}")
        rest = tokens[5:]
        parts = [rest]
        if "|" in rest:
            cut = rest.index("|")
            parts = [rest[:cut], rest[cut + 1:]]
        expand = [(0, 1) if tok == "*" else (int(tok),) for tok in reads]
        for a in expand[0]:
            for w in expand[1]:
                for g in expand[2]:
                    pair = []
                    for part in parts:
                        nxt, ww, cw, moves = _parse_outcome(part, lineno, (a, w, g))
                        if nxt not in index:
                            raise MachineSyntaxError(lineno, "next_state", f"undeclared state {nxt!r}")
                        pair.append(ChoiceOutcome(index[nxt], ww, cw, *moves))
                    if len(pair) == 1:
                        pair.append(pair[0])
                    key = table_index(index[state], a, w, g)
                    if table[key] is not None:
                        raise MachineSemanticError(f"line {lineno}: duplicate transition for {state} {a}{w}{g}")
                    table[key] = tuple(pair)
    return MachineSpec(
        name=header["name"][1],
        mode=mode,
        s=integer("work"),
        c=integer("catalytic"),
        states=tuple(ordered),
        accept=index[role["accept"]],
        reject=index[role["reject"]],
        table=tuple(table),
    )


def format_machine(spec: MachineSpec) -> str:
    """Canonical document: one explicit record per transition key."""
    move = {-1: "-1", 0: "0", 1: "+1"}

    def outcome(o: ChoiceOutcome) -> str:
        return " ".join([spec.states[o.next_state], str(o.work_write), str(o.cat_write),
                         move[o.input_move], move[o.work_move], move[o.cat_move]])

    lines = [
        f"name: {spec.name}",
        f"mode: {spec.mode.value}",
        f"work: {spec.s}",
        f"catalytic: {spec.c}",
        "states: " + " ".join(spec.states),
        f"start: {spec.states[spec.start]}",
        f"accept: {spec.states[spec.accept]}",
        f"reject: {spec.states[spec.reject]}",
    ]
    for key, entry in enumerate(spec.table):
        if entry is None:
            continue
        head = f"delta {spec.states[key >> 3]} {(key >> 2) & 1} {(key >> 1) & 1} {key & 1} -> "
        body = outcome(entry[0])
        if entry[1] != entry[0]:
            body += " | " + outcome(entry[1])
        lines.append(head + body)
    return "\n".join(lines) + "\n"
