"""Exhaustive checkers for the structural facts the reduction relies on.

The checkers build the whole 0-forest over every configuration at once with
numpy (a vectorised transition function written independently of
``machine.step``) and label its components with scipy.  Each checker also
accepts a hand-built :class:`ZeroForest`, which is how the negative controls
inject violations that no valid machine can produce.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .coc import DriverIncomplete, block_count, driver, make_view
from .confgraph import Layout
from .machine import (Configuration, MachineSpec, Mode, PromiseViolation, as_bits, brute_semantics,
                      explore, validate)


@dataclass
class LemmaReport:
    lemma: str
    machine: str
    params: str
    passed: bool
    checked: int = 0
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"[{self.lemma}]", f"machine={self.machine}", f"params={self.params}",
                 f"result={'pass' if self.passed else 'fail'}", f"checked={self.checked}"]
        lines += [f"{k}={v}" for k, v in self.details.items()]
        if self.witness:
            lines += [f"witness.{k}={v}" for k, v in self.witness.items()]
        return "\n".join(lines)


@dataclass
class ZeroForest:
    """Explicit 0-graph: an edge list over vertex ids, a halting mask, and ``roots[tau]`` = (accept, reject)."""

    edges: np.ndarray
    halting: np.ndarray
    roots: np.ndarray
    W: int
    c: int
    decode: Callable[[int], object] = repr
    labels: np.ndarray = field(init=False)
    comp_size: np.ndarray = field(init=False)
    comp_halting: np.ndarray = field(init=False)
    comp_edges: np.ndarray = field(init=False)

    def __post_init__(self):
        n = len(self.halting)
        src, dst = self.edges[:, 0], self.edges[:, 1]
        adj = csr_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))
        _, self.labels = connected_components(adj, directed=False)
        ncomp = int(self.labels.max()) + 1
        self.comp_size = np.bincount(self.labels, minlength=ncomp)
        self.comp_halting = np.bincount(self.labels, weights=self.halting, minlength=ncomp).astype(np.int64)
        # loops and repeated edges are counted, so a tree needs exactly |V| - 1 of them
        self.comp_edges = np.bincount(self.labels[src], minlength=ncomp).astype(np.int64)

    @property
    def universe(self) -> int:
        return len(self.halting)

    def component_size(self, v: int) -> int:
        return int(self.comp_size[self.labels[v]])

    def members(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.labels == self.labels[v])

    @classmethod
    def from_machine(cls, spec: MachineSpec, x: str | Sequence[int]) -> "ZeroForest":
        x = np.array(as_bits(x), dtype=np.int64)
        n, s, c, Q = len(x), spec.s, spec.c, len(spec.states)
        shape = (Q, n, s, c, 2**s, 2**c)
        state, ih, wh, ch, work, cat = np.indices(shape, dtype=np.int64).reshape(6, -1)

        cols = np.full((6, Q * 8), -1, dtype=np.int64)
        for key, pair in enumerate(spec.table):
            if pair is not None:
                cols[:, key] = pair[0]
        wbit = (work >> wh) & 1
        gbit = (cat >> ch) & 1
        key = state * 8 + x[ih] * 4 + wbit * 2 + gbit
        nq, ww, cw, im, wm, cm = cols[:, key]
        halting = (state == spec.accept) | (state == spec.reject)

        def move(pos, delta, length):
            new = pos + delta
            return np.where((new >= 0) & (new < length), new, pos)

        nwork = (work & ~(1 << wh)) | (ww << wh)
        ncat = (cat & ~(1 << ch)) | (cw << ch)
        live = ~halting
        dest = np.ravel_multi_index(
            (np.where(live, nq, 0), move(ih, im, n), move(wh, wm, s), move(ch, cm, c),
             np.where(live, nwork, 0), np.where(live, ncat, 0)), shape)
        edges = np.stack([np.flatnonzero(live), dest[live]], axis=1)

        taus = np.arange(2**c)
        roots = np.stack([np.ravel_multi_index((np.full_like(taus, h), 0 * taus, 0 * taus, 0 * taus,
                                                0 * taus, taus), shape)
                          for h in (spec.accept, spec.reject)], axis=1)

        def decode(v: int) -> Configuration:
            return Configuration(*(int(f) for f in np.unravel_index(v, shape)))

        W = Layout.for_machine(spec, n).W
        return cls(edges, halting, roots, W, c, decode)


def _name(spec) -> str:
    return "injected" if spec is None else spec.name


def _forest(spec, x, forest):
    return ZeroForest.from_machine(spec, x) if forest is None else forest


def _taus(forest: ZeroForest, taus: Iterable[int] | int | None) -> list[int]:
    if taus is None:
        return list(range(len(forest.roots)))
    if isinstance(taus, int):
        return [taus]
    return list(taus)


def check_tree_facts(spec: MachineSpec, x, taus=None, forest: ZeroForest | None = None) -> LemmaReport:
    """Each halting-rooted component is a tree holding exactly one halting vertex."""
    f = _forest(spec, x, forest)
    checked = 0
    for tau in _taus(f, taus):
        for b, root in enumerate(f.roots[tau]):
            comp = f.labels[root]
            size, halts, edges = int(f.comp_size[comp]), int(f.comp_halting[comp]), int(f.comp_edges[comp])
            checked += 1
            if halts != 1 or edges != size - 1:
                others = [f.decode(int(v)) for v in f.members(root) if f.halting[v] and v != root]
                return LemmaReport("tree-facts", _name(spec), f"c={f.c}", False, checked,
                                   {"tau": tau, "root": f.decode(int(root)), "size": size,
                                    "edges": edges, "halting": halts, "other_halting": others[:4]})
    return LemmaReport("tree-facts", _name(spec), f"c={f.c}", True, checked)


def _valid_everywhere(spec, x, taus):
    for tau in taus:
        rep = validate(spec, x, tau)
        if not rep.valid:
            return tau, rep
    return None


def check_disjointness(spec: MachineSpec, x, forest: ZeroForest | None = None) -> LemmaReport:
    """Halting trees for distinct tapes never share a vertex (the machine must be valid for all tapes)."""
    f = _forest(spec, x, forest)
    taus = _taus(f, None)
    params = f"c={f.c} tapes={len(taus)}"
    if forest is None:
        bad = _valid_everywhere(spec, x, taus)
        if bad is not None:
            tau, rep = bad
            return LemmaReport("disjointness", _name(spec), params, False, 0,
                               {"tau": tau, "problem": rep.problem, "walk": list(rep.witness)})
    comps = f.labels[f.roots]  # shape (tapes, 2)
    flat = comps.reshape(-1)
    owners = np.repeat(np.arange(len(taus)), 2)
    order = np.argsort(flat, kind="stable")
    same = np.flatnonzero(flat[order][1:] == flat[order][:-1])
    intersections = len(same)
    if intersections:
        a, b = order[same[0]], order[same[0] + 1]
        return LemmaReport("disjointness", _name(spec), params, False, len(flat),
                           {"tau": int(owners[a]), "tau_other": int(owners[b]),
                            "shared_vertex": f.decode(int(f.roots.reshape(-1)[b]))},
                           {"intersections": intersections})
    return LemmaReport("disjointness", _name(spec), params, True, len(flat), details={"intersections": 0})


def check_expectation(spec: MachineSpec, x, forest: ZeroForest | None = None) -> LemmaReport:
    """Summed tree sizes over all tapes stay within ``2^(c+W)``; at least half the tapes have both trees ``<= 4*2^W``."""
    f = _forest(spec, x, forest)
    sizes = f.comp_size[f.labels[f.roots]]  # (tapes, 2) vertex counts
    bound = 2 ** (f.c + f.W)
    acc_sum, rej_sum = int(sizes[:, 0].sum()), int(sizes[:, 1].sum())
    small = int(np.count_nonzero(sizes.max(axis=1) <= 4 * 2**f.W))
    details = {"accept_sum": acc_sum, "reject_sum": rej_sum, "bound": bound,
               "universe": f.universe, "small_tapes": small}
    params = f"c={f.c} W={f.W}"
    if acc_sum > bound or rej_sum > bound or 2 * small < len(sizes):
        worst = int(np.argmax(sizes.max(axis=1)))
        return LemmaReport("expectation", _name(spec), params, False, len(sizes),
                           {"tau": worst, "sizes": tuple(int(v) for v in sizes[worst])}, details)
    return LemmaReport("expectation", _name(spec), params, True, len(sizes), details=details)


def check_containment(spec: MachineSpec, x, taus=None, forest: ZeroForest | None = None) -> LemmaReport:
    """Every configuration reachable from start lies in the accept or reject tree of the same tape."""
    f = _forest(spec, x, forest)
    encode_shape = (len(spec.states), len(as_bits(x)), spec.s, spec.c, 2**spec.s, 2**spec.c)
    checked = 0
    for tau in _taus(f, taus):
        allowed = set(int(v) for v in f.labels[f.roots[tau]])
        for conf in explore(spec, x, tau):
            checked += 1
            v = int(np.ravel_multi_index(tuple(conf), encode_shape))
            if int(f.labels[v]) not in allowed:
                return LemmaReport("containment", spec.name, f"c={f.c}", False, checked,
                                   {"tau": tau, "configuration": conf})
    return LemmaReport("containment", spec.name, f"c={f.c}", True, checked)


def equivalence_sweep(spec: MachineSpec, inputs: Iterable[str], mode: Mode | str | None = None,
                      taus: Iterable[int] | None = None, counters=None, **driver_kw) -> LemmaReport:
    """Driver verdict against reference semantics, plus tape restoration, for every input and tape.

    ``counters`` is an optional callable ``(x, tau, k, B) -> list`` giving the
    initial counter blocks.
    """
    mode = spec.mode if mode is None else Mode(mode)
    checked = agree = restored = 0
    inputs = list(inputs)
    for x in inputs:
        view = make_view(spec, x, B=driver_kw.get("B"), S=driver_kw.get("S"))
        k = block_count(view)
        for tau in (range(2**spec.c) if taus is None else taus):
            checked += 1
            ctrs = None if counters is None else counters(x, tau, k, view.B)
            try:
                ref = brute_semantics(spec, x, tau, mode)
            except PromiseViolation as exc:
                ref = exc
            try:
                res = driver(spec, x, tau, ctrs, mode=mode, view=view,
                             unsafe_small_s=driver_kw.get("unsafe_small_s", False))
                got, ok_tape = res.verdict, res.restored
            except (PromiseViolation, DriverIncomplete) as exc:
                got, ok_tape = exc, exc.restored
            same = (got.probability == ref.probability if isinstance(ref, PromiseViolation)
                    and isinstance(got, PromiseViolation) else got == ref)
            agree += same
            restored += ok_tape
            if not (same and ok_tape):
                return LemmaReport("equivalence", spec.name, f"mode={mode.value} c={spec.c}", False,
                                   checked, {"input": x, "tau": tau, "driver": got, "reference": ref,
                                             "restored": ok_tape},
                                   {"agree": agree, "restored": restored})
    return LemmaReport("equivalence", spec.name, f"mode={mode.value} c={spec.c} inputs={len(inputs)}",
                       True, checked, details={"agree": agree, "restored": restored})
