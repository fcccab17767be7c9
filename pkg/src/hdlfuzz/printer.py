"""Deterministic source printer for the Verilog subset.

The output is canonical: every constant is sized decimal, every binary and
conditional expression is parenthesized, and statement blocks always use
begin/end. Printing the same Design twice yields byte-identical text, and
the parser maps the canonical form back to the identical AST.
"""

from .ast import (
    AlwaysBlock, Binary, BitSelect, Blocking, Case, Concat, Cond, Const,
    ContinuousAssign, Design, If, Instance, ModuleDef, NetDecl, NonBlocking,
    PartSelect, Ref, RegDecl, Unary, INPUT,
)
from .errors import DesignError

IND = "  "


def print_expr(e) -> str:
    if isinstance(e, Const):
        return f"{e.width}'d{e.value}"
    if isinstance(e, Ref):
        return e.name
    if isinstance(e, Unary):
        return e.op + _operand(e.operand)
    if isinstance(e, Binary):
        return f"({print_expr(e.left)} {e.op} {print_expr(e.right)})"
    if isinstance(e, Cond):
        return (f"({print_expr(e.cond)} ? {print_expr(e.if_true)}"
                f" : {print_expr(e.if_false)})")
    if isinstance(e, BitSelect):
        return f"{e.name}[{print_expr(e.index)}]"
    if isinstance(e, PartSelect):
        return f"{e.name}[{e.msb}:{e.lsb}]"
    if isinstance(e, Concat):
        return "{" + ", ".join(print_expr(p) for p in e.parts) + "}"
    raise DesignError(f"cannot print expression {e!r}")


def _operand(e) -> str:
    # Unary operands that are themselves unary get explicit parens, so `~-x`
    # never appears and reductions stay unambiguous.
    s = print_expr(e)
    if isinstance(e, Unary):
        return "(" + s + ")"
    return s


def _width_spec(width: int, signed: bool) -> str:
    parts = []
    if signed:
        parts.append("signed")
    if width > 1:
        parts.append(f"[{width - 1}:0]")
    return (" ".join(parts) + " ") if parts else ""


def _stmt_lines(s, depth, out):
    pad = IND * depth
    if isinstance(s, NonBlocking):
        out.append(f"{pad}{print_expr(s.target)} <= {print_expr(s.rhs)};")
    elif isinstance(s, Blocking):
        out.append(f"{pad}{print_expr(s.target)} = {print_expr(s.rhs)};")
    elif isinstance(s, If):
        out.append(f"{pad}if ({print_expr(s.cond)}) begin")
        for t in s.then_body:
            _stmt_lines(t, depth + 1, out)
        if s.else_body:
            out.append(f"{pad}end else begin")
            for t in s.else_body:
                _stmt_lines(t, depth + 1, out)
        out.append(f"{pad}end")
    elif isinstance(s, Case):
        out.append(f"{pad}case ({print_expr(s.subject)})")
        for arm in s.arms:
            out.append(f"{pad}{IND}{print_expr(arm.label)}: begin")
            for t in arm.body:
                _stmt_lines(t, depth + 2, out)
            out.append(f"{pad}{IND}end")
        out.append(f"{pad}{IND}default: begin")
        for t in s.default:
            _stmt_lines(t, depth + 2, out)
        out.append(f"{pad}{IND}end")
        out.append(f"{pad}endcase")
    else:
        raise DesignError(f"cannot print statement {s!r}")


def _item_lines(it, out):
    if isinstance(it, NetDecl):
        out.append(f"{IND}wire {_width_spec(it.width, it.signed)}{it.name};")
    elif isinstance(it, RegDecl):
        out.append(f"{IND}reg {_width_spec(it.width, it.signed)}{it.name}"
                   f" = {it.width}'d{it.init};")
    elif isinstance(it, ContinuousAssign):
        out.append(f"{IND}assign {print_expr(it.target)} = {print_expr(it.rhs)};")
    elif isinstance(it, AlwaysBlock):
        out.append(f"{IND}always @(posedge {it.clock}) begin")
        for s in it.body:
            _stmt_lines(s, 2, out)
        out.append(f"{IND}end")
    elif isinstance(it, Instance):
        conns = ", ".join(f".{p}({print_expr(a)})" for p, a in it.conns)
        out.append(f"{IND}{it.module} {it.name}({conns});")
    else:
        raise DesignError(f"cannot print item {it!r}")


def module_lines(mod: ModuleDef) -> list:
    out = [f"module {mod.name}({', '.join(p.name for p in mod.ports)});"]
    for p in mod.ports:
        kw = "input" if p.direction == INPUT else "output"
        out.append(f"{IND}{kw} {_width_spec(p.width, p.signed)}{p.name};")
    for it in mod.items:
        _item_lines(it, out)
    out.append("endmodule")
    return out


def print_design(design: Design) -> str:
    chunks = []
    for m in design.modules:
        chunks.append("\n".join(module_lines(m)))
    return "\n\n".join(chunks) + "\n"


def design_line_count(design: Design) -> int:
    total = 0
    for m in design.modules:
        total += len(module_lines(m))
    return total + max(0, len(design.modules) - 1)  # blank separators


def item_line_count(it) -> int:
    out = []
    _item_lines(it, out)
    return len(out)


def stmt_line_count(s) -> int:
    out = []
    _stmt_lines(s, 0, out)
    return len(out)
