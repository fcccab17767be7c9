import dataclasses
import random

import pytest

from hdlfuzz.ast import (
    AlwaysBlock, Binary, Const, Design, If, ModuleDef, NonBlocking, Port,
    Ref, RegDecl, INPUT, OUTPUT, check_design, design_statement_count,
)
from hdlfuzz.depgraph import build_comb_dag, detect_comb_loops
from hdlfuzz.errors import NoEligibleVariableError
from hdlfuzz.generate import generate_seed, generate_stimulus
from hdlfuzz.metrics import structural_metrics
from hdlfuzz.mutate import (
    InsertionPoint, MutationConfig, clone_path_with_guard,
    enumerate_insertion_points, inject_dead_code, mutate, synthesize_guard,
)
from hdlfuzz.simulate import (
    check_guards, compare_traces, eval_expr, profile, simulate,
)
from conftest import SMALL_GEN, make_stim


def three_stmt_design():
    top = ModuleDef("top", (
        Port("clk", INPUT, 1), Port("a", INPUT, 4), Port("q", OUTPUT, 4)), (
        RegDecl("q", 4, False, 0), RegDecl("r1", 4, False, 0),
        RegDecl("r2", 4, False, 0),
        AlwaysBlock((
            NonBlocking(Ref("r1"), Ref("a")),
            NonBlocking(Ref("r2"), Binary("+", Ref("r1"), Const(1, 4))),
            NonBlocking(Ref("q"), Binary("^", Ref("r1"), Ref("r2"))),
        ), "clk"),
    ))
    d = Design((top,), "top")
    check_design(d)
    return d


def test_point_count_includes_boundaries():
    d = three_stmt_design()
    points = enumerate_insertion_points(d)
    root_points = [p for p in points if p.path == (("always", 3),)]
    assert len(root_points) == 4  # before/between/after three statements


def test_one_bit_designs_have_no_points():
    top = ModuleDef("top", (
        Port("clk", INPUT, 1), Port("a", INPUT, 1), Port("q", OUTPUT, 1)), (
        RegDecl("q", 1, False, 0),
        AlwaysBlock((NonBlocking(Ref("q"), Ref("a")),), "clk")))
    d = Design((top,), "top")
    check_design(d)
    assert enumerate_insertion_points(d) == []


def test_all_points_cloneable():
    d = three_stmt_design()
    stim = make_stim([("a", 4)], [(i % 16,) for i in range(12)])
    prof = profile(d, stim)
    rng = random.Random(0)
    for point in enumerate_insertion_points(d):
        guard = synthesize_guard(prof, point, "profiled", rng, design=d)
        mutated = clone_path_with_guard(d, point, guard)
        check_design(mutated)
        assert compare_traces(simulate(d, stim),
                              simulate(mutated, stim)).is_equivalent


def test_profiled_range_guard_true_every_cycle():
    d = three_stmt_design()
    stim = make_stim([("a", 4)], [(min(i + 2, 9),) for i in range(12)])
    prof = profile(d, stim)
    facts = prof.for_module("top")
    assert facts["a"].min_u == 2 and facts["a"].max_u == 9
    rng = random.Random(1)
    point = InsertionPoint("top", (("always", 3),), 1)
    for _ in range(8):
        guard = synthesize_guard(prof, point, "profiled", rng, design=d)
        assert check_guards(d, stim, [("top", guard.expr)]) == []


def test_constant_signal_guard_is_equality():
    d = three_stmt_design()
    stim = make_stim([("a", 4)], [(7,) for _ in range(6)])
    prof = profile(d, stim)
    rng = random.Random(0)
    point = InsertionPoint("top", (("always", 3),), 0)
    seen = set()
    for _ in range(16):
        g = synthesize_guard(prof, point, "profiled", rng, design=d)
        seen.add(g.expr.op)
        assert check_guards(d, stim, [("top", g.expr)]) == []
    assert "==" in seen  # constant facts synthesize equality guards


def test_tautological_guards_exhaustive():
    d = three_stmt_design()
    scope = {"a": None}
    rng = random.Random(3)
    point = InsertionPoint("top", (("always", 3),), 2)
    from hdlfuzz.ast import module_scope
    mod_scope = module_scope(d.modules[0])
    for _ in range(12):
        g = synthesize_guard(None, point, "tautological", rng, design=d)
        width = mod_scope[g.variable].width
        assert width <= 16
        for value in range(1 << width):
            assert eval_expr(g.expr, mod_scope, {g.variable: value}) == 1


def test_no_eligible_variable_error():
    top = ModuleDef("top", (
        Port("clk", INPUT, 1), Port("a", INPUT, 1), Port("q", OUTPUT, 1)), (
        RegDecl("q", 1, False, 0),
        AlwaysBlock((NonBlocking(Ref("q"), Ref("a")),), "clk")))
    d = Design((top,), "top")
    rng = random.Random(0)
    point = InsertionPoint("top", (("always", 1),), 0)
    with pytest.raises(NoEligibleVariableError):
        synthesize_guard(None, point, "tautological", rng, design=d)


def test_clone_shape_and_degenerate_point():
    d = three_stmt_design()
    stim = make_stim([("a", 4)], [(i % 16,) for i in range(8)])
    prof = profile(d, stim)
    rng = random.Random(5)
    m0 = structural_metrics(d)
    end_point = InsertionPoint("top", (("always", 3),), 3)
    guard = synthesize_guard(prof, end_point, "profiled", rng, design=d)
    mutated = clone_path_with_guard(d, end_point, guard)
    m1 = structural_metrics(mutated)
    assert m1.s == m0.s
    assert design_statement_count(mutated) == design_statement_count(d) + 1
    body = mutated.modules[0].items[3].body
    assert isinstance(body[-1], If) and body[-1].then_body == ()
    assert compare_traces(simulate(d, stim),
                          simulate(mutated, stim)).is_equivalent


def test_inject_budget_zero_is_identity():
    d = three_stmt_design()
    stim = make_stim([("a", 4)], [(i % 16,) for i in range(8)])
    prof = profile(d, stim)
    rng = random.Random(5)
    point = InsertionPoint("top", (("always", 3),), 1)
    guard = synthesize_guard(prof, point, "profiled", rng, design=d)
    cloned = clone_path_with_guard(d, point, guard)
    handle = ("top", point.path, point.index)
    assert inject_dead_code(cloned, handle, 0, rng) == cloned


def test_inject_preserves_traces_and_loop_freedom():
    d = three_stmt_design()
    stim = make_stim([("a", 4)], [(i % 16,) for i in range(16)])
    prof = profile(d, stim)
    for seed in range(10):
        rng = random.Random(seed)
        point = InsertionPoint("top", (("always", 3),), seed % 4)
        guard = synthesize_guard(prof, point, "profiled", rng, design=d)
        cloned = clone_path_with_guard(d, point, guard)
        handle = ("top", point.path, point.index)
        injected = inject_dead_code(cloned, handle, 5 + seed % 6, rng)
        check_design(injected)
        assert detect_comb_loops(build_comb_dag(injected)) == []
        assert compare_traces(simulate(d, stim),
                              simulate(injected, stim)).is_equivalent
        m0, m1 = structural_metrics(cloned), structural_metrics(injected)
        assert m1.v >= m0.v and m1.lines > m0.lines


def wrap_fixture(seed):
    d = generate_seed(dataclasses.replace(SMALL_GEN, rng_seed=seed))
    stim = generate_stimulus(d, 48, seed)
    prof = profile(d, stim)
    v = mutate(d, prof, MutationConfig(rng_seed=seed, p_wrap=1.0,
                                       max_guards=1, dead_budget=(1, 4)),
               seed_id=f"s{seed}")
    return d, stim, v


def test_wrap_refs_and_connection_accounting():
    wraps_seen = 0
    for seed in range(10):
        d, stim, v = wrap_fixture(seed)
        wraps = [r for r in v.lineage.records if r.kind == "wrap"]
        if not wraps:
            continue
        wraps_seen += 1
        m0, m1 = structural_metrics(d), v.metrics
        assert m1.refs == m0.refs + len(wraps)
        sub = next(m for m in v.design.modules if m.name.startswith("sub_w"))
        inst = next(it for m in v.design.modules for it in m.items
                    if getattr(it, "module", None) == sub.name)
        # connection delta accounts for every new binding (incl. clock)
        assert len(inst.conns) == len(sub.ports)
        assert compare_traces(simulate(d, stim),
                              simulate(v.design, stim)).is_equivalent
    assert wraps_seen >= 5


def test_minimal_mutation_is_one_if_wrapper():
    d = three_stmt_design()
    stim = make_stim([("a", 4)], [(i % 16,) for i in range(8)])
    prof = profile(d, stim)
    cfg = MutationConfig(max_guards=1, p_wrap=0.0, dead_budget=(0, 0),
                         rng_seed=4)
    v = mutate(d, prof, cfg, "x")
    kinds = [r.kind for r in v.lineage.records]
    assert kinds == ["clone"]
    assert design_statement_count(v.design) == design_statement_count(d) + 1
    assert v.metrics.s == structural_metrics(d).s
    assert compare_traces(simulate(d, stim),
                          simulate(v.design, stim)).is_equivalent


def test_mutate_deterministic():
    d = three_stmt_design()
    stim = make_stim([("a", 4)], [(i % 16,) for i in range(8)])
    prof = profile(d, stim)
    cfg = MutationConfig(rng_seed=11, p_wrap=0.5)
    v1 = mutate(d, prof, cfg, "x")
    v2 = mutate(d, prof, cfg, "x")
    assert v1.design == v2.design and v1.lineage == v2.lineage


@pytest.mark.parametrize("mode", ["profiled", "tautological"])
@pytest.mark.parametrize("seed", range(8))
def test_emi_invariant_small_corpus(mode, seed):
    d = generate_seed(dataclasses.replace(SMALL_GEN, rng_seed=seed))
    stim = generate_stimulus(d, 48, seed)
    prof = profile(d, stim)
    cfg = MutationConfig(guard_mode=mode, rng_seed=seed, p_wrap=0.4)
    v = mutate(d, prof, cfg, f"s{seed}")
    assert compare_traces(simulate(d, stim),
                          simulate(v.design, stim)).is_equivalent
    assert detect_comb_loops(build_comb_dag(v.design)) == []
    assert check_guards(v.design, stim, v.guards()) == []
    m0, m1 = structural_metrics(d), v.metrics
    assert m1.v >= m0.v and m1.c >= m0.c and m1.lines > m0.lines
