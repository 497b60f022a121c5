from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catalytic.corpus import CORPUS, STCONN_INPUTS, get_machine
from catalytic.machine import (BOTH, Configuration, MachineSemanticError, MachineSyntaxError, Mode,
                               Outcome, PromiseViolation, acceptance_probabilities, as_bits,
                               brute_semantics, degree_bound, explore, format_machine,
                               forward_edges, halting_configuration, inverse_edges, parse_machine,
                               simulate, start_configuration, step, validate)
from support import universe, valid_cases

MACHINES = Path(__file__).resolve().parent.parent / "machines"

M_ID_DOC = """\
name: M_id
mode: deterministic
work: 2
catalytic: 2
states: start accept reject
start: start
accept: accept
reject: reject
delta start * * * -> accept = = 0 0 0
"""


def test_parse_identity_document():
    spec = parse_machine(M_ID_DOC)
    assert len(spec.states) == 3
    assert spec.states[spec.start] == "start"
    assert parse_machine(format_machine(spec)) == spec


def test_halting_state_with_transition_rejected():
    doc = M_ID_DOC + "delta accept * * * -> reject = = 0 0 0\n"
    with pytest.raises(MachineSemanticError):
        parse_machine(doc)


def test_catalytic_longer_than_work_exponent_rejected():
    # s = 2 allows at most c = 4
    with pytest.raises(MachineSemanticError):
        parse_machine(M_ID_DOC.replace("catalytic: 2", "catalytic: 5"))
    assert parse_machine(M_ID_DOC.replace("catalytic: 2", "catalytic: 4")).c == 4


def test_missing_transition_rejected():
    with pytest.raises(MachineSemanticError):
        parse_machine(M_ID_DOC.replace("delta start * * *", "delta start 0 * *"))


@pytest.mark.parametrize("bad, field", [
    ("delta start * * * -> accept = = 0 0 2", "cat_move"),
    ("delta start * * * -> nowhere = = 0 0 0", "next_state"),
    ("delta start 2 * * -> accept = = 0 0 0", "input_bit"),
    ("delta start * * * -> accept x = 0 0 0", "work_write"),
])
def test_syntax_errors_name_line_and_field(bad, field):
    doc = M_ID_DOC.replace("delta start * * * -> accept = = 0 0 0", bad)
    with pytest.raises(MachineSyntaxError) as info:
        parse_machine(doc)
    assert info.value.line == 9
    assert info.value.field == field


def test_deterministic_mode_requires_equal_choices():
    doc = M_ID_DOC.replace("-> accept = = 0 0 0", "-> accept = = 0 0 0 | reject = = 0 0 0")
    with pytest.raises(MachineSemanticError):
        parse_machine(doc)
    assert parse_machine(doc.replace("deterministic", "nondet")).mode is Mode.NONDET


@pytest.mark.parametrize("path", sorted(MACHINES.glob("*.machine")), ids=lambda p: p.stem)
def test_shipped_documents_parse_and_validate(path):
    spec = parse_machine(path.read_text())
    for tau in range(2**spec.c):
        assert validate(spec, "01", tau).valid


def test_shipped_documents_match_corpus_builders():
    for stem, name in [("m_id", "M_id"), ("m_flip", "M_flip"), ("coin", "COIN")]:
        doc = parse_machine((MACHINES / f"{stem}.machine").read_text())
        built = get_machine(name, 4)
        # state order may differ; behaviour may not
        for tau in range(16):
            assert brute_semantics(doc, "00", tau) == brute_semantics(built, "00", tau)


# -- step and edges ---------------------------------------------------------


def test_step_identity_both_choices():
    spec = get_machine("M_id", 4)
    start = start_configuration(spec, 0b1010)
    acc = halting_configuration(spec, 0b1010, True)
    assert step(spec, (0, 0), start, 0) == acc
    assert step(spec, (0, 0), start, 1) == acc


def test_step_flip_changes_cell_zero():
    spec = get_machine("M_flip", 4)
    start = start_configuration(spec, 0b0110)
    nxt = step(spec, (0, 0), start, 0)
    assert nxt.cat == 0b0111
    assert spec.states[nxt.state] == "back"


def test_step_on_halting_is_an_error():
    spec = get_machine("M_id", 4)
    with pytest.raises(ValueError):
        step(spec, (0, 0), halting_configuration(spec, 0, True), 0)


def test_head_moves_clamped():
    spec = get_machine("TOUCH", 4)
    x = as_bits("01")
    for v in universe(spec, 2):
        if spec.is_halting(v.state):
            continue
        for choice in (0, 1):
            u = step(spec, x, v, choice)
            assert 0 <= u.input_head < 2 and 0 <= u.work_head < spec.s and 0 <= u.cat_head < spec.c


def test_forward_edges_identity():
    spec = get_machine("M_id", 4)
    acc = halting_configuration(spec, 3, True)
    assert forward_edges(spec, (0, 0), acc) == []
    assert forward_edges(spec, (0, 0), start_configuration(spec, 3)) == [(BOTH, acc)]


def test_forward_edges_branch_in_stconn():
    spec = get_machine("ND-STCONN", 6)
    x = as_bits(STCONN_INPUTS[0])
    edges = forward_edges(spec, x, start_configuration(spec, 0))
    assert sorted(tuple(sorted(l)) for l, _ in edges) == [(0,), (1,)]
    assert edges[0][1] != edges[1][1]


def test_inverse_edges_identity():
    spec = get_machine("M_id", 2)
    start = start_configuration(spec, 1)
    assert inverse_edges(spec, (0, 0), halting_configuration(spec, 1, True)) == [(BOTH, start)]
    assert inverse_edges(spec, (0, 0), start) == []


@pytest.mark.parametrize("name,c,x", [
    ("M_id", 2, "00"), ("M_flip", 3, "00"), ("COIN", 2, "0"), ("TOUCH", 3, "01"),
    ("PARITY", 2, "101"), ("MAJ3", 2, "1100"), ("ND-STCONN", 2, "110011"), ("CATSCAN", 3, "0"),
    ("LOOP", 2, "0"), ("SMASH", 2, "0"),
])
def test_forward_inverse_duality_exhaustive(name, c, x):
    spec = get_machine(name, c)
    bits = as_bits(x)
    forward = set()
    for v in universe(spec, len(bits)):
        for labels, u in forward_edges(spec, bits, v):
            for b in labels:
                forward.add((v, b, u))
    backward = set()
    for u in universe(spec, len(bits)):
        for labels, v in inverse_edges(spec, bits, u):
            for b in labels:
                backward.add((v, b, u))
    assert forward == backward


def test_inverse_edges_sorted_by_descriptor():
    spec = get_machine("MAJ3", 3)
    bits = as_bits("1100")
    for u in universe(spec, 4):
        states = [v.state for _, v in inverse_edges(spec, bits, u)]
        assert states == sorted(states)


# -- validity and reference semantics ---------------------------------------


def test_validate_identity():
    spec = get_machine("M_id", 4)
    for tau in range(16):
        rep = validate(spec, "00", tau)
        assert rep.valid and rep.reachable == 2


def test_validate_cycle_witness():
    rep = validate(get_machine("LOOP", 4), "0", 5)
    assert not rep.valid and rep.problem == "cycle"
    assert rep.witness[0] == rep.witness[-1]


def test_validate_restoration_witness():
    spec = get_machine("SMASH", 4)
    rep = validate(spec, "0", 0)
    assert not rep.valid and rep.problem == "catalytic tape not restored"
    assert rep.witness[-1].cat == 1


def test_brute_identity_nondet():
    spec = get_machine("M_id", 4).with_mode(Mode.NONDET)
    assert brute_semantics(spec, "00", 7).outcome is Outcome.ACCEPT


def test_coin_strict_threshold():
    v = brute_semantics(get_machine("COIN", 4), "0", 0)
    assert v.probability == Fraction(1, 2)
    assert v.outcome is Outcome.REJECT


def _connected(bits: str) -> bool:
    edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    adj = {i: set() for i in range(4)}
    for (a, b), bit in zip(edges, bits):
        if bit == "1":
            adj[a].add(b)
            adj[b].add(a)
    seen, todo = {0}, [0]
    while todo:
        for w in adj[todo.pop()] - seen:
            seen.add(w)
            todo.append(w)
    return 3 in seen


@pytest.mark.parametrize("x", STCONN_INPUTS)
def test_stconn_matches_path_enumeration(x):
    spec = get_machine("ND-STCONN", 4)
    co = get_machine("CO-ND-STCONN", 4)
    expected = Outcome.ACCEPT if _connected(x) else Outcome.REJECT
    for tau in (0, 5, 15):
        assert brute_semantics(spec, x, tau).outcome is expected
        # the complement machine rejects exactly on connected inputs
        assert brute_semantics(co, x, tau).outcome is not expected


def test_stconn_all_graphs_small_tape():
    spec = get_machine("ND-STCONN", 3)
    for g in range(64):
        x = format(g, "06b")
        expected = Outcome.ACCEPT if _connected(x) else Outcome.REJECT
        assert brute_semantics(spec, x, 0).outcome is expected


@pytest.mark.parametrize("x, p", [("1100", Fraction(3, 4)), ("1000", Fraction(1, 4)),
                                  ("1111", Fraction(1)), ("1010", Fraction(0)),
                                  ("0000", Fraction(1, 2))])
def test_majority_probabilities(x, p):
    spec = get_machine("MAJ3", 4)
    if Fraction(1, 3) < p < Fraction(2, 3):
        with pytest.raises(PromiseViolation) as info:
            brute_semantics(spec, x, 3)
        assert info.value.probability == p
    else:
        v = brute_semantics(spec, x, 3)
        assert v.probability == p
        assert v.accepted == (p >= Fraction(2, 3))


def test_majority_unbounded_mode_uses_half_threshold():
    spec = get_machine("MAJ3", 4)
    assert brute_semantics(spec, "0000", 0, Mode.UNBOUNDED).outcome is Outcome.REJECT
    assert brute_semantics(spec, "1100", 0, Mode.UNBOUNDED).outcome is Outcome.ACCEPT


def test_parity_machine():
    spec = get_machine("PARITY", 3)
    for x in ("000", "011", "101", "110"):
        assert not brute_semantics(spec, x, 2).accepted
    for x in ("001", "111"):
        assert brute_semantics(spec, x, 2).accepted


# -- degree bound -----------------------------------------------------------


def _max_degrees(spec, x):
    bits = as_bits(x)
    indeg, total = {}, 0
    outdeg = {}
    for v in universe(spec, len(bits)):
        out = forward_edges(spec, bits, v)
        outdeg[v] = len(out)
        for _, u in out:
            indeg[u] = indeg.get(u, 0) + 1
    total = max(indeg.get(v, 0) + outdeg[v] for v in outdeg)
    return max(indeg.values()), total


def test_degree_bound_identity():
    assert degree_bound(get_machine("M_id", 2)) >= 3
    _, total = _max_degrees(get_machine("M_id", 2), "00")
    assert total <= degree_bound(get_machine("M_id", 2))


def test_degree_bound_flip_matches_sweep():
    spec = get_machine("M_flip", 2)
    max_in, total = _max_degrees(spec, "00")
    assert (max_in, total) == (1, 2)
    assert degree_bound(spec) - 2 == max_in


@pytest.mark.parametrize("name,c,x", [("TOUCH", 3, "01"), ("MAJ3", 3, "1100"),
                                      ("ND-STCONN", 3, "110011"), ("PARITY", 3, "101"),
                                      ("CATSCAN", 4, "0")])
def test_degree_bound_sound(name, c, x):
    spec = get_machine(name, c)
    _, total = _max_degrees(spec, x)
    assert total <= degree_bound(spec)


# -- properties --------------------------------------------------------------


@pytest.mark.parametrize("case", [c for c in valid_cases((3,)) if c[0] in ("PARITY", "TOUCH", "CATSCAN",
                                                                            "M_flip", "M_id")],
                         ids=lambda c: f"{c[0]}-{c[3]}")
def test_determinism_collapse(case):
    _, _, spec, x = case
    for tau in range(2**spec.c):
        final = simulate(spec, x, tau)
        assert brute_semantics(spec, x, tau).accepted == (final.state == spec.accept)


@settings(max_examples=40, deadline=None)
@given(name=st.sampled_from(["MAJ3", "COIN", "ND-STCONN"]), tau=st.integers(0, 15), data=st.data())
def test_probability_normalization(name, tau, data):
    entry = CORPUS[name]
    spec = entry.build(4)
    x = data.draw(st.sampled_from(entry.inputs))
    graph = explore(spec, x, tau)
    start = start_configuration(spec, tau)
    probs = acceptance_probabilities(spec, graph, start)

    depth = {}
    for v in probs:  # sinks first
        depth[v] = max((depth[u] + 1 for _, u in graph[v]), default=0)
    for v, p in probs.items():
        assert 0 <= p <= 1
        assert (2 ** depth[v]) % p.denominator == 0


@settings(max_examples=50, deadline=None)
@given(q=st.integers(0, 10), ih=st.integers(0, 2), wh=st.integers(0, 1), ch=st.integers(0, 3),
       work=st.integers(0, 3), cat=st.integers(0, 15))
def test_step_writes_only_under_heads(q, ih, wh, ch, work, cat):
    spec = get_machine("PARITY", 4)
    conf = Configuration(q, ih, wh, ch, work, cat)
    if spec.is_halting(q):
        return
    nxt = step(spec, as_bits("101"), conf, 0)
    assert (nxt.work ^ work) & ~(1 << wh) == 0
    assert (nxt.cat ^ cat) & ~(1 << ch) == 0
