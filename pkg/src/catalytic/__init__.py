"""Catalytic Turing machines: simulation, 0-graph walks and the compress-or-compute driver."""

from .machine import (Configuration, MachineSpec, Mode, Outcome, PromiseViolation, Verdict,
                      brute_semantics, parse_machine, step, validate)
from .confgraph import EdgeRef, Layout, ZeroGraphView
from .coc import VirtualTape, compute_or_compress, decompress_round, driver
from .corpus import CORPUS, get_machine

__all__ = [
    "CORPUS", "Configuration", "EdgeRef", "Layout", "MachineSpec", "Mode", "Outcome",
    "PromiseViolation", "Verdict", "VirtualTape", "ZeroGraphView", "brute_semantics",
    "compute_or_compress", "decompress_round", "driver", "get_machine", "parse_machine", "step",
    "validate",
]
