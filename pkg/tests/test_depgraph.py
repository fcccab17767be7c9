import dataclasses

import networkx as nx
import pytest

from hdlfuzz.ast import (
    AlwaysBlock, Binary, ContinuousAssign, Design, ModuleDef, NetDecl,
    NonBlocking, Port, Ref, RegDecl, Unary, INPUT, OUTPUT, check_design,
)
from hdlfuzz.depgraph import build_comb_dag, detect_comb_loops, timing_complexity
from hdlfuzz.errors import CombLoopError
from hdlfuzz.generate import generate_seed
from conftest import SMALL_GEN


def design_of(items, ports):
    d = Design((ModuleDef("top", tuple(ports), tuple(items)),), "top")
    return d


def test_and_gate_edges():
    d = design_of([ContinuousAssign(Ref("y"), Binary("&", Ref("a"), Ref("b")))],
                  [Port("a", INPUT, 1), Port("b", INPUT, 1), Port("y", OUTPUT, 1)])
    check_design(d)
    g = build_comb_dag(d)
    op = next(n for n in g.nodes if ":&" in n)
    assert ("a", op) in g.edges and ("b", op) in g.edges and (op, "y") in g.edges


def test_register_boundary(dff_design):
    g = build_comb_dag(dff_design)
    assert "regD:q" in g.reg_sinks
    assert "q" in g.reg_outputs
    # no combinational edge into the register output node
    assert not [e for e in g.edges if e[1] == "q"]


def test_chained_assign_depth():
    d = design_of([
        NetDecl("y", 1),
        ContinuousAssign(Ref("y"), Binary("&", Ref("a"), Ref("b"))),
        ContinuousAssign(Ref("z"), Binary("|", Ref("y"), Ref("c")))],
        [Port("a", INPUT, 1), Port("b", INPUT, 1), Port("c", INPUT, 1),
         Port("z", OUTPUT, 1)])
    check_design(d)
    assert timing_complexity(d) == 2


def test_loop_detected_and_reported_as_signals():
    d = design_of([
        NetDecl("a", 1), NetDecl("b", 1),
        ContinuousAssign(Ref("a"), Ref("b")),
        ContinuousAssign(Ref("b"), Ref("a")),
        ContinuousAssign(Ref("y"), Ref("a"))],
        [Port("x", INPUT, 1), Port("y", OUTPUT, 1)])
    check_design(d)
    cycles = detect_comb_loops(build_comb_dag(d))
    assert len(cycles) == 1
    assert sorted(cycles[0]) == ["a", "b"]
    with pytest.raises(CombLoopError):
        timing_complexity(d)


def test_register_breaks_loop():
    d = design_of([
        NetDecl("a", 1), RegDecl("b", 1, False, 0),
        ContinuousAssign(Ref("a"), Ref("b")),
        AlwaysBlock((NonBlocking(Ref("b"), Ref("a")),), "clk"),
        ContinuousAssign(Ref("y"), Ref("a"))],
        [Port("clk", INPUT, 1), Port("y", OUTPUT, 1)])
    check_design(d)
    assert detect_comb_loops(build_comb_dag(d)) == []


def test_timing_wire_is_free():
    d = design_of([ContinuousAssign(Ref("y"), Ref("a"))],
                  [Port("a", INPUT, 1), Port("y", OUTPUT, 1)])
    check_design(d)
    assert timing_complexity(d) == 0


def test_timing_two_levels():
    d = design_of([ContinuousAssign(
        Ref("y"), Binary("|", Binary("&", Ref("a"), Ref("b")), Ref("c")))],
        [Port("a", INPUT, 1), Port("b", INPUT, 1), Port("c", INPUT, 1),
         Port("y", OUTPUT, 1)])
    check_design(d)
    assert timing_complexity(d) == 2


def test_timing_reg_to_reg_single_adder():
    d = design_of([
        RegDecl("r1", 8, False, 0), RegDecl("r2", 8, False, 0),
        AlwaysBlock((NonBlocking(Ref("r2"),
                                 Binary("+", Ref("r1"), Ref("r1"))),), "clk"),
        ContinuousAssign(Ref("y"), Ref("r2"))],
        [Port("clk", INPUT, 1), Port("y", OUTPUT, 8)])
    check_design(d)
    assert timing_complexity(d) == 1


def test_timing_monotone_under_operator_insertion():
    base = design_of([ContinuousAssign(
        Ref("y"), Binary("&", Ref("a"), Ref("b")))],
        [Port("a", INPUT, 1), Port("b", INPUT, 1), Port("y", OUTPUT, 1)])
    check_design(base)
    wrapped = design_of([ContinuousAssign(
        Ref("y"), Unary("~", Binary("&", Ref("a"), Ref("b"))))],
        [Port("a", INPUT, 1), Port("b", INPUT, 1), Port("y", OUTPUT, 1)])
    check_design(wrapped)
    assert timing_complexity(wrapped) == timing_complexity(base) + 1


@pytest.mark.parametrize("seed", range(8))
def test_loop_soundness_vs_networkx(seed):
    """Independent oracle: topological sorting of the same edge set."""
    d = generate_seed(dataclasses.replace(SMALL_GEN, rng_seed=seed))
    g = build_comb_dag(d)
    nxg = nx.DiGraph()
    nxg.add_nodes_from(g.nodes)
    nxg.add_edges_from(g.edges)
    acyclic = nx.is_directed_acyclic_graph(nxg)
    assert (detect_comb_loops(g) == []) == acyclic
    assert acyclic  # generator output must be loop-free


def test_loop_finder_agrees_with_networkx_on_cyclic_graph():
    d = design_of([
        NetDecl("a", 1), NetDecl("b", 1), NetDecl("c", 1),
        ContinuousAssign(Ref("a"), Binary("&", Ref("b"), Ref("x"))),
        ContinuousAssign(Ref("b"), Ref("c")),
        ContinuousAssign(Ref("c"), Ref("a")),
        ContinuousAssign(Ref("y"), Ref("c"))],
        [Port("x", INPUT, 1), Port("y", OUTPUT, 1)])
    check_design(d)
    g = build_comb_dag(d)
    nxg = nx.DiGraph(g.edges)
    assert not nx.is_directed_acyclic_graph(nxg)
    (cycle,) = detect_comb_loops(g)
    assert set(cycle) <= {"a", "b", "c"} and len(cycle) == 3
