"""Command-line entry point: ``catalytic <command> [options]``.

Exit status: 0 ok, 1 usage, 2 invalid machine, 3 lemma or equivalence
failure, 4 promise violation.
"""

from __future__ import annotations

import argparse
import logging
import random
import sys
from collections import Counter
from dataclasses import dataclass

from . import oracle
from .coc import DriverIncomplete, block_count, driver, make_view
from .confgraph import INF, ZeroGraphView, export_dot
from .corpus import CORPUS
from .machine import (InvalidMachineError, MachineError, MachineSpec, Mode, PromiseViolation,
                      brute_semantics, halting_configuration, parse_machine, validate)
from .verify import (ZeroForest, check_containment, check_disjointness, check_expectation,
                     check_tree_facts, equivalence_sweep)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_LEMMA, EXIT_PROMISE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    machine: str | None
    corpus: str | None
    c: int | None
    inputs: tuple[str, ...]
    tau: str
    mode: str | None
    B: int | None
    S: int | None
    unsafe_small_s: bool
    fmt: str
    counters: str


def load(cfg: RunConfig) -> tuple[MachineSpec, tuple[str, ...]]:
    if (cfg.machine is None) == (cfg.corpus is None):
        raise UsageError("give exactly one of --machine or --corpus")
    if cfg.corpus is not None:
        if cfg.corpus not in CORPUS:
            raise UsageError(f"unknown corpus machine {cfg.corpus!r}; known: {', '.join(CORPUS)}")
        entry = CORPUS[cfg.corpus]
        spec = entry.build(entry.default_c if cfg.c is None else cfg.c)
        inputs = cfg.inputs or entry.inputs
    else:
        if cfg.c is not None:
            raise UsageError("--c applies to corpus machines only")
        try:
            with open(cfg.machine) as fh:
                spec = parse_machine(fh.read())
        except OSError as exc:
            raise UsageError(str(exc)) from None
        inputs = cfg.inputs
        if not inputs:
            raise UsageError("--input is required with --machine")
    for x in inputs:
        if not x or set(x) - {"0", "1"}:
            raise UsageError(f"input {x!r} must be a non-empty bit string")
    if cfg.mode is not None:
        spec = spec.with_mode(cfg.mode)
    return spec, tuple(inputs)


def parse_taus(text: str, c: int) -> list[int]:
    """``all``, ``sample:N:seed`` or a hex tape (cell ``i`` is bit ``i`` of the number)."""
    if text == "all":
        return list(range(2**c))
    if text.startswith("sample:"):
        try:
            _, count, seed = text.split(":")
            count, seed = int(count), int(seed)
        except ValueError:
            raise UsageError(f"bad tape sample {text!r}; expected sample:N:seed") from None
        rng = random.Random(seed)
        return sorted(rng.sample(range(2**c), min(count, 2**c)))
    try:
        tau = int(text, 16)
    except ValueError:
        raise UsageError(f"bad tape {text!r}; expected hex, all or sample:N:seed") from None
    if tau >= 2**c:
        raise UsageError(f"tape {text} does not fit c={c} bits")
    return [tau]


def _hex(tau: int, c: int) -> str:
    return format(tau, f"0{(c + 3) // 4}x")


def _view(spec, x, cfg) -> ZeroGraphView:
    try:
        return make_view(spec, x, B=cfg.B, S=cfg.S)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _counters(cfg: RunConfig, view, x: str, tau: int) -> list[int] | None:
    k = block_count(view)
    if cfg.counters == "zero":
        return None
    kind, _, seed = cfg.counters.partition(":")
    if kind != "random":
        raise UsageError(f"bad counters {cfg.counters!r}; expected zero or random:SEED")
    rng = random.Random(f"{seed}:{x}:{tau}")
    top = min(view.S, 2**view.B)
    return [rng.randrange(top) for _ in range(k)]


# ---------------------------------------------------------------------------
# commands


def cmd_validate(cfg: RunConfig, out) -> int:
    spec, inputs = load(cfg)
    status = EXIT_OK
    for x in inputs:
        view_layout = _view(spec, x, cfg).layout
        for tau in parse_taus(cfg.tau, spec.c):
            rep = validate(spec, x, tau)
            print(f"input={x} tau={_hex(tau, spec.c)} " + rep.to_text(view_layout).replace("\n", " "),
                  file=out)
            if not rep.valid:
                status = EXIT_INVALID
    return status


def cmd_run(cfg: RunConfig, out) -> int:
    spec, inputs = load(cfg)
    status = EXIT_OK
    for x in inputs:
        for tau in parse_taus(cfg.tau, spec.c):
            head = f"input={x} tau={_hex(tau, spec.c)}"
            try:
                print(f"{head} {brute_semantics(spec, x, tau).to_text()}", file=out)
            except PromiseViolation as exc:
                print(f"{head} outcome=promise-violation probability={exc.probability}", file=out)
                status = max(status, EXIT_PROMISE)
            except InvalidMachineError as exc:
                print(f"{head} outcome=invalid problem={exc.report.problem}", file=out)
                return EXIT_INVALID
    return status


def cmd_transform(cfg: RunConfig, out) -> int:
    spec, inputs = load(cfg)
    status = EXIT_OK
    runs = restored = 0
    for x in inputs:
        view = _view(spec, x, cfg)
        W = view.layout.W
        if view.S < 2 ** (W + 3) and not cfg.unsafe_small_s:
            raise UsageError(f"S={view.S} is below 2^(W+3) for W={W}; pass --unsafe-small-s to allow")
        for tau in parse_taus(cfg.tau, spec.c):
            head = f"input={x} tau={_hex(tau, spec.c)}"
            runs += 1
            try:
                ref = brute_semantics(spec, x, tau)
            except PromiseViolation as exc:
                ref = exc
            except InvalidMachineError as exc:
                print(f"{head} outcome=invalid problem={exc.report.problem}", file=out)
                return EXIT_INVALID
            try:
                res = driver(spec, x, tau, _counters(cfg, view, x, tau), view=view,
                             unsafe_small_s=cfg.unsafe_small_s)
            except (PromiseViolation, DriverIncomplete) as exc:
                restored += exc.restored
                kind = "promise-violation" if isinstance(exc, PromiseViolation) else "incomplete"
                extra = f" probability={exc.probability}" if isinstance(exc, PromiseViolation) else ""
                agree = isinstance(ref, PromiseViolation) and isinstance(exc, PromiseViolation)
                print(f"{head} outcome={kind}{extra} agree={'yes' if agree else 'no'} "
                      f"restored={'yes' if exc.restored else 'no'}", file=out)
                status = max(status, EXIT_PROMISE if agree else EXIT_LEMMA)
                continue
            restored += res.restored
            agree = res.verdict == ref
            print(f"{head} {res.verdict.to_text()} agree={'yes' if agree else 'no'} "
                  f"restored={'yes' if res.restored else 'no'}", file=out)
            if cfg.fmt == "text":
                for rec in res.trace:
                    print(f"  {rec.to_text()}", file=out)
            elif cfg.fmt == "query":
                print(oracle.serialize_query(res.query), end="", file=out)
            elif cfg.fmt == "dot":
                print(graph_dot(res.graph, f"{spec.name} {head}"), end="", file=out)
            if not (agree and res.restored):
                status = max(status, EXIT_LEMMA)
    print(f"tape restored: {restored}/{runs}", file=out)
    return status


def graph_dot(g, title: str) -> str:
    def name(v):
        return f"n{v[0]}_{v[1]}"

    lines = [f'digraph "{title}" {{', "  node [shape=circle];"]
    for v in sorted(g.nodes):
        role = {g.r: " start", g.t: " accept", g.rej: " reject"}.get(v, "")
        lines.append(f'  {name(v)} [label="{v[0]}:{v[1]}{role}"];')
    for (a, b), labels in sorted(g.edges.items()):
        lines.append(f'  {name(a)} -> {name(b)} [label="{"".join(map(str, sorted(labels)))}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_verify(cfg: RunConfig, out) -> int:
    spec, inputs = load(cfg)
    failed = False
    for x in inputs:
        forest = ZeroForest.from_machine(spec, x)
        taus = parse_taus(cfg.tau, spec.c)
        reports = [check_tree_facts(spec, x, taus, forest=forest),
                   check_disjointness(spec, x),
                   check_expectation(spec, x, forest=forest),
                   check_containment(spec, x, taus, forest=forest)]
        if all(r.passed for r in reports[1:2]):
            reports.append(equivalence_sweep(spec, [x], taus=taus))
        for rep in reports:
            print(f"input={x}", file=out)
            print(rep.to_text(), file=out)
            print(file=out)
            failed |= not rep.passed
    return EXIT_LEMMA if failed else EXIT_OK


def _vertices(size) -> str:
    if size is INF:
        return "inf"
    return str(1 if size == 1 else size // 2 + 1)


def cmd_stats(cfg: RunConfig, out) -> int:
    spec, inputs = load(cfg)
    for x in inputs:
        view = _view(spec, x, cfg)
        hist = {True: Counter(), False: Counter()}
        for tau in parse_taus(cfg.tau, spec.c):
            for accept in (True, False):
                size = view.size(halting_configuration(spec, tau, accept))
                hist[accept][(_vertices(size), "inf" if size is INF else str(size))] += 1
        for accept in (True, False):
            tree = "accept" if accept else "reject"
            for (verts, tour), count in sorted(hist[accept].items(), key=lambda kv: kv[0]):
                print(f"input={x} tree={tree} vertices={verts} tour={tour} tapes={count}", file=out)
    return EXIT_OK


def cmd_export_dot(cfg: RunConfig, out) -> int:
    spec, inputs = load(cfg)
    for x in inputs:
        view = _view(spec, x, cfg)
        for tau in parse_taus(cfg.tau, spec.c):
            for accept in (True, False):
                print(export_dot(view, halting_configuration(spec, tau, accept)), end="", file=out)
    return EXIT_OK


def cmd_list(cfg: RunConfig, out) -> int:
    for name, entry in CORPUS.items():
        spec = entry.build(entry.default_c)
        print(f"{name} mode={spec.mode.value} states={len(spec.states)} c={spec.c} "
              f"inputs={','.join(entry.inputs)} valid={'yes' if entry.valid else 'no'}", file=out)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "run": cmd_run,
    "transform": cmd_transform,
    "verify": cmd_verify,
    "stats": cmd_stats,
    "export-dot": cmd_export_dot,
    "list": cmd_list,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="catalytic", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log oracle query sizes")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "list":
            continue
        src = p.add_mutually_exclusive_group()
        src.add_argument("--machine", help="machine document path")
        src.add_argument("--corpus", help="built-in machine name (see `catalytic list`)")
        p.add_argument("--c", type=int, help="catalytic tape length for corpus machines")
        p.add_argument("--input", action="append", default=[], help="input bits (repeatable)")
        p.add_argument("--tau", default="all", help="hex tape, all, or sample:N:seed (default all)")
        p.add_argument("--mode", choices=[m.value for m in Mode], help="override the machine's mode")
        p.add_argument("--set-B", type=int, dest="B", help="counter width (default 2W)")
        p.add_argument("--set-S", type=int, dest="S", help="walk bound (default 2^B)")
        p.add_argument("--unsafe-small-s", action="store_true",
                       help="allow transform with S below 2^(W+3)")
        p.add_argument("--format", dest="fmt", choices=["text", "dot", "query"], default="text")
        p.add_argument("--counters", default="random:0",
                       help="initial counter blocks: zero or random:SEED (default random:0)")
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.command == "list":
        return cmd_list(None, out)
    cfg = RunConfig(args.machine, args.corpus, args.c, tuple(args.input), args.tau, args.mode,
                    args.B, args.S, args.unsafe_small_s, args.fmt, args.counters)
    try:
        return COMMANDS[args.command](cfg, out)
    except UsageError as exc:
        print(f"catalytic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MachineError as exc:
        print(f"catalytic: invalid machine document: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
