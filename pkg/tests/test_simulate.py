import dataclasses

import pytest

from hdlfuzz.ast import (
    Binary, Const, ContinuousAssign, Design, ModuleDef, NetDecl, Port, Ref,
    INPUT, OUTPUT, check_design,
)
from hdlfuzz.errors import WidthMismatchError
from hdlfuzz.generate import generate_seed, generate_stimulus
from hdlfuzz.parser import parse_design
from hdlfuzz.printer import print_design
from hdlfuzz.simulate import (
    Trace, compare_traces, dump_trace, parse_trace, profile, simulate,
    simulate_full, simulate_interpreted, check_guards,
)
from conftest import SMALL_GEN, make_stim


def test_dff_one_cycle_delay(dff_design):
    stim = make_stim([("d", 1)], [(0,), (1,), (0,)])
    t = simulate(dff_design, stim)
    assert [row[0] for row in t.rows] == [0, 0, 1]


def test_xor_gate(xor_design):
    stim = make_stim([("a", 1), ("b", 1)], [(0, 1)])
    assert simulate(xor_design, stim).rows == ((1,),)


def test_roundtrip_simulation_equal(hier_design):
    stim = make_stim([("rst", 1), ("in0", 8)],
                     [(1, 5), (0, 7), (0, 9), (0, 200)])
    again = parse_design(print_design(hier_design))
    assert compare_traces(simulate(hier_design, stim),
                          simulate(again, stim)).is_equivalent


def test_stimulus_interface_checked(dff_design):
    stim = make_stim([("nope", 1)], [(0,)])
    with pytest.raises(WidthMismatchError):
        simulate(dff_design, stim)


def test_trace_dump_format():
    t = Trace((("y", 2),), ((2,), (1,)))
    assert dump_trace(t) == "y 2\n\n10\n01\n"


def test_trace_dump_empty():
    t = Trace((("y", 2),), ())
    text = dump_trace(t)
    assert text == "y 2\n\n"
    assert parse_trace(text) == t


def test_trace_roundtrip_and_equality():
    t = Trace((("a", 3), ("b", 1)), ((5, 1), (0, 0), (7, 1)))
    assert parse_trace(dump_trace(t)) == t
    assert dump_trace(t) == dump_trace(parse_trace(dump_trace(t)))


def test_compare_identical():
    t = Trace((("y", 2),), ((1,), (2,)))
    assert compare_traces(t, t).is_equivalent


def test_compare_first_difference_located():
    a = Trace((("x", 1), ("y", 2)), tuple((0, i % 4) for i in range(6)))
    rows = list(a.rows)
    rows[3] = (0, (rows[3][1] ^ 2))
    b = Trace(a.signals, tuple(rows))
    v = compare_traces(a, b)
    assert v.kind == "mismatch" and v.cycle == 3 and v.signal == "y"


def test_compare_mismatched_interface():
    a = Trace((("y", 2),), ())
    b = Trace((("y", 3),), ())
    assert compare_traces(a, b).kind == "mismatched-interface"


def test_compare_is_equivalence_relation():
    a = Trace((("y", 2),), ((1,), (2,)))
    b = Trace((("y", 2),), ((1,), (2,)))
    c = Trace((("y", 2),), ((1,), (3,)))
    assert compare_traces(a, a).is_equivalent
    assert compare_traces(a, b).is_equivalent == compare_traces(b, a).is_equivalent
    assert not compare_traces(a, c).is_equivalent


def test_profile_counter_range(counter_design):
    stim = make_stim([], [() for _ in range(10)])
    p = profile(counter_design, stim)
    f = p.facts[("top", "q")]
    assert (f.min_u, f.max_u) == (0, 9)
    assert f.sequential


def test_profile_constant_net():
    top = ModuleDef("top", (Port("a", INPUT, 8), Port("y", OUTPUT, 8)), (
        NetDecl("k", 8),
        ContinuousAssign(Ref("k"), Const(42, 8)),
        ContinuousAssign(Ref("y"), Binary("+", Ref("a"), Ref("k")))))
    d = Design((top,), "top")
    check_design(d)
    stim = make_stim([("a", 8)], [(i,) for i in range(16)])
    f = profile(d, stim).facts[("top", "k")]
    assert f.min_u == f.max_u == 42
    assert f.const_mask == 0xFF and f.const_val == 42 and f.is_constant


@pytest.mark.parametrize("seed", range(6))
def test_profile_facts_hold_under_replay(seed):
    """Independent oracle: re-simulate and check every recorded fact."""
    d = generate_seed(dataclasses.replace(SMALL_GEN, rng_seed=seed))
    stim = generate_stimulus(d, 48, seed)
    p = profile(d, stim)
    _, valuations, order = simulate_full(d, stim)
    index = {n: i for i, n in enumerate(order)}
    from hdlfuzz.simulate import instance_contexts
    contexts = instance_contexts(d)
    violations = 0
    for (mod, var), f in p.facts.items():
        for prefix in contexts[mod]:
            i = index[prefix + var]
            for vals in valuations:
                v = vals[i]
                if not (f.min_u <= v <= f.max_u):
                    violations += 1
                if (v & f.const_mask) != f.const_val:
                    violations += 1
    assert violations == 0


@pytest.mark.parametrize("seed", range(6))
def test_compiled_matches_interpreter(seed):
    """The compiled simulator against the structural interpreter."""
    d = generate_seed(dataclasses.replace(SMALL_GEN, rng_seed=seed))
    stim = generate_stimulus(d, 32, seed + 100)
    assert compare_traces(simulate(d, stim),
                          simulate_interpreted(d, stim)).is_equivalent


def test_check_guards_reports_false_guard(counter_design):
    stim = make_stim([], [() for _ in range(10)])
    good = [("top", Binary("<=", Ref("q"), Const(9, 8)))]
    bad = [("top", Binary("<=", Ref("q"), Const(3, 8)))]
    assert check_guards(counter_design, stim, good) == []
    assert len(check_guards(counter_design, stim, bad)) == 1
