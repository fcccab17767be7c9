import dataclasses

import pytest

from hdlfuzz.ast import (
    AlwaysBlock, Binary, Const, Design, If, Instance, ModuleDef, NonBlocking,
    Port, Ref, RegDecl, INPUT, OUTPUT, check_design,
)
from hdlfuzz.errors import SimulatedCrash
from hdlfuzz.faults import mock_buggy_synthesizer
from hdlfuzz.generate import generate_seed, generate_stimulus
from hdlfuzz.metrics import structural_metrics
from hdlfuzz.mutate import MutationConfig, mutate
from hdlfuzz.simulate import compare_traces, profile, simulate
from conftest import SMALL_GEN, make_stim


def deep_if_design():
    """If nested three deep whose innermost else is observable."""
    top = ModuleDef("top", (
        Port("clk", INPUT, 1), Port("a", INPUT, 4), Port("q", OUTPUT, 4)), (
        RegDecl("q", 4, False, 0),
        AlwaysBlock((
            If(Binary(">=", Ref("a"), Const(0, 4)), (
                If(Binary("<=", Ref("a"), Const(15, 4)), (
                    If(Binary("==", Binary("&", Ref("a"), Const(0, 4)),
                              Const(0, 4)),
                       (NonBlocking(Ref("q"), Ref("a")),),
                       (NonBlocking(Ref("q"), Const(7, 4)),)),
                ), ()),
            ), ()),
        ), "clk"),
    ))
    d = Design((top,), "top")
    check_design(d)
    return d


def test_class_a_swaps_depth_three():
    d = deep_if_design()
    compiled = mock_buggy_synthesizer(d, "A", 0)
    assert compiled != d
    stim = make_stim([("a", 4)], [(i % 16,) for i in range(8)])
    verdict = compare_traces(simulate(d, stim), simulate(compiled, stim))
    assert verdict.kind == "mismatch"  # dead branch (q<=7) became live


def test_class_a_identity_without_deep_ifs(counter_design):
    compiled = mock_buggy_synthesizer(counter_design, "A", 0)
    assert compiled == counter_design


def test_class_b_folds_one_binding(hier_design):
    compiled = mock_buggy_synthesizer(hier_design, "B", 3)
    assert compiled != hier_design
    folded = [a for m in compiled.modules for it in m.items
              if isinstance(it, Instance)
              for _, a in it.conns if isinstance(a, Const)]
    assert len(folded) == 1
    stim = make_stim([("rst", 1), ("in0", 8)],
                     [(1, 3), (0, 9), (0, 12), (0, 200)])
    verdict = compare_traces(simulate(hier_design, stim),
                             simulate(compiled, stim))
    assert verdict.kind == "mismatch"


def test_class_b_identity_without_instances(counter_design):
    assert mock_buggy_synthesizer(counter_design, "B", 0) == counter_design


def test_class_c_crashes_above_threshold():
    d = generate_seed(dataclasses.replace(SMALL_GEN, rng_seed=4))
    refs = structural_metrics(d).refs
    assert mock_buggy_synthesizer(d, "C", 0, refs_threshold=refs) == d
    with pytest.raises(SimulatedCrash) as err:
        mock_buggy_synthesizer(d, "C", 0, refs_threshold=refs - 1)
    assert "reference limit" in str(err.value)
    assert "0x" in err.value.backtrace and "/tmp/" in err.value.backtrace


def test_fault_determinism(hier_design):
    a1 = mock_buggy_synthesizer(hier_design, "B", 11)
    a2 = mock_buggy_synthesizer(hier_design, "B", 11)
    assert a1 == a2
    b = mock_buggy_synthesizer(hier_design, "B", 12)
    # rng seed picks the binding; different seeds may pick differently,
    # but each is reproducible
    assert mock_buggy_synthesizer(hier_design, "B", 12) == b


def test_unknown_class_rejected(hier_design):
    with pytest.raises(ValueError):
        mock_buggy_synthesizer(hier_design, "Z", 0)


def test_class_a_on_guard_variant_detected():
    """The end-to-end story: a cloned guard makes a depth-3 If, class A
    swaps it, and the differential against the compiled seed reports it."""
    found = 0
    for seed in range(12):
        d = generate_seed(dataclasses.replace(SMALL_GEN, rng_seed=seed))
        stim = generate_stimulus(d, 48, seed)
        prof = profile(d, stim)
        v = mutate(d, prof, MutationConfig(rng_seed=seed, max_guards=3,
                                           dead_budget=(3, 6)), "s")
        cs = mock_buggy_synthesizer(d, "A", 0)
        cv = mock_buggy_synthesizer(v.design, "A", 0)
        if compare_traces(simulate(cs, stim), simulate(cv, stim)).kind == "mismatch":
            found += 1
    assert found >= 1
