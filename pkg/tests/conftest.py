import pytest

from hdlfuzz.ast import (
    AlwaysBlock, Binary, Const, ContinuousAssign, Design, If, Instance,
    ModuleDef, NetDecl, NonBlocking, Port, Ref, RegDecl, Unary, INPUT, OUTPUT,
    check_design,
)
from hdlfuzz.generate import GenConfig, Stimulus


def make_stim(signals, rows):
    return Stimulus(tuple(signals), tuple(tuple(r) for r in rows))


@pytest.fixture
def dff_design():
    """Single DFF q <= d with init 0 (no reset input)."""
    top = ModuleDef("top", (
        Port("clk", INPUT, 1), Port("d", INPUT, 1), Port("q", OUTPUT, 1)), (
        RegDecl("q", 1, False, 0),
        AlwaysBlock((NonBlocking(Ref("q"), Ref("d")),), "clk"),
    ))
    d = Design((top,), "top")
    check_design(d)
    return d


@pytest.fixture
def xor_design():
    top = ModuleDef("top", (
        Port("a", INPUT, 1), Port("b", INPUT, 1), Port("y", OUTPUT, 1)), (
        ContinuousAssign(Ref("y"), Binary("^", Ref("a"), Ref("b"))),
    ))
    d = Design((top,), "top")
    check_design(d)
    return d


@pytest.fixture
def counter_design():
    """8-bit counter wrapping at 10, plus the count as output."""
    wrap = Binary("==", Ref("q"), Const(9, 8))
    top = ModuleDef("top", (
        Port("clk", INPUT, 1), Port("q", OUTPUT, 8)), (
        RegDecl("q", 8, False, 0),
        AlwaysBlock((
            If(wrap, (NonBlocking(Ref("q"), Const(0, 8)),),
               (NonBlocking(Ref("q"), Binary("+", Ref("q"), Const(1, 8))),)),
        ), "clk"),
    ))
    d = Design((top,), "top")
    check_design(d)
    return d


@pytest.fixture
def hier_design():
    """Counter feeding an adder submodule; exercises flattening."""
    sub = ModuleDef("adder", (
        Port("a", INPUT, 8), Port("b", INPUT, 8), Port("y", OUTPUT, 8)), (
        ContinuousAssign(Ref("y"), Binary("+", Ref("a"), Ref("b"))),
    ))
    top = ModuleDef("top", (
        Port("clk", INPUT, 1), Port("rst", INPUT, 1), Port("in0", INPUT, 8),
        Port("out0", OUTPUT, 8)), (
        RegDecl("r0", 8, False, 0),
        NetDecl("w0", 8),
        Instance("adder", "u1", (("a", Ref("r0")), ("b", Ref("in0")),
                                 ("y", Ref("w0")))),
        ContinuousAssign(Ref("out0"), Unary("~", Ref("w0"))),
        AlwaysBlock((
            If(Ref("rst"), (NonBlocking(Ref("r0"), Const(0, 8)),),
               (NonBlocking(Ref("r0"), Binary("+", Ref("r0"), Ref("in0"))),)),
        ), "clk"),
    ))
    d = Design((sub, top), "top")
    check_design(d)
    return d


TINY_GEN = GenConfig(line_budget=(15, 70), submodules=(0, 1), max_modules=2,
                     width_choices=(2, 3), max_expr_depth=2)

SMALL_GEN = GenConfig(line_budget=(80, 160), submodules=(1, 2), max_modules=3,
                      width_choices=(2, 4, 8), max_expr_depth=3)
