"""Typed AST for the synthesizable Verilog subset.

All nodes are frozen dataclasses holding tuples, so a Design is an immutable
value: hashable, safe to share across workers, and usable as a cache key.
Semantics are strictly two-state (0/1); every signal value is the unsigned
bit pattern of its declared width.

Width resolution rule: operands of a binary operator are extended to the
widest operand (sign-extended only when *all* operands are signed, otherwise
zero-extended); comparisons, logical operators and reductions yield an
unsigned 1-bit result; shifts take the left operand's width.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional, Union

from .errors import DesignError, WidthMismatchError

INPUT = "input"
OUTPUT = "output"

# Operator sets referenced by the printer, parser, simulator and SMT export.
UNARY_OPS = ("~", "-", "&", "|", "^")  # bit-not, negate, reductions
ARITH_OPS = ("+", "-", "*")
BITWISE_OPS = ("&", "|", "^")
SHIFT_OPS = ("<<", ">>", ">>>")
COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
LOGICAL_OPS = ("&&", "||")
BINARY_OPS = ARITH_OPS + BITWISE_OPS + SHIFT_OPS + COMPARE_OPS + LOGICAL_OPS


# --------------------------------------------------------------------------
# Expressions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: int
    width: int


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Cond:
    cond: "Expr"
    if_true: "Expr"
    if_false: "Expr"


@dataclass(frozen=True)
class BitSelect:
    name: str
    index: "Expr"  # constant or dynamic; out-of-range reads as 0


@dataclass(frozen=True)
class PartSelect:
    name: str
    msb: int
    lsb: int


@dataclass(frozen=True)
class Concat:
    parts: tuple  # MSB-first


Expr = Union[Const, Ref, Unary, Binary, Cond, BitSelect, PartSelect, Concat]
LValue = Union[Ref, BitSelect, PartSelect]


# --------------------------------------------------------------------------
# Statements
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NonBlocking:
    target: LValue
    rhs: Expr


@dataclass(frozen=True)
class Blocking:
    target: LValue
    rhs: Expr


@dataclass(frozen=True)
class If:
    cond: Expr
    then_body: tuple = ()
    else_body: tuple = ()


@dataclass(frozen=True)
class CaseArm:
    label: Const
    body: tuple


@dataclass(frozen=True)
class Case:
    subject: Expr
    arms: tuple  # of CaseArm
    default: tuple = ()


Stmt = Union[NonBlocking, Blocking, If, Case]


# --------------------------------------------------------------------------
# Module items
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Port:
    name: str
    direction: str  # "input" | "output"
    width: int
    signed: bool = False


@dataclass(frozen=True)
class NetDecl:
    name: str
    width: int
    signed: bool = False


@dataclass(frozen=True)
class RegDecl:
    name: str
    width: int
    signed: bool = False
    init: int = 0


@dataclass(frozen=True)
class ContinuousAssign:
    target: LValue
    rhs: Expr


@dataclass(frozen=True)
class AlwaysBlock:
    body: tuple  # of Stmt
    clock: str = "clk"  # posedge-sensitive


@dataclass(frozen=True)
class Instance:
    module: str
    name: str
    conns: tuple  # of (port_name, Expr); actuals are Refs, or Consts on inputs


Item = Union[NetDecl, RegDecl, ContinuousAssign, AlwaysBlock, Instance]


@dataclass(frozen=True)
class ModuleDef:
    name: str
    ports: tuple  # of Port
    items: tuple  # of Item


@dataclass(frozen=True)
class Design:
    modules: tuple  # of ModuleDef
    top: str


# --------------------------------------------------------------------------
# Scopes and width resolution
# --------------------------------------------------------------------------

KIND_INPUT = "input"
KIND_OUTPUT = "output"  # output port with no backing reg (a net)
KIND_WIRE = "wire"
KIND_REG = "reg"


@dataclass(frozen=True)
class SigInfo:
    name: str
    width: int
    signed: bool
    kind: str
    init: int = 0


def module_map(design: Design) -> dict:
    return {m.name: m for m in design.modules}


@functools.lru_cache(maxsize=512)
def module_scope(mod: ModuleDef) -> dict:
    """Map of name -> SigInfo for every signal visible in `mod`."""
    scope = {}
    regs = {it.name: it for it in mod.items if isinstance(it, RegDecl)}
    for p in mod.ports:
        if p.direction == INPUT:
            scope[p.name] = SigInfo(p.name, p.width, p.signed, KIND_INPUT)
        elif p.name in regs:
            r = regs[p.name]
            scope[p.name] = SigInfo(p.name, p.width, p.signed, KIND_REG, r.init)
        else:
            scope[p.name] = SigInfo(p.name, p.width, p.signed, KIND_OUTPUT)
    for it in mod.items:
        if isinstance(it, NetDecl):
            scope[it.name] = SigInfo(it.name, it.width, it.signed, KIND_WIRE)
        elif isinstance(it, RegDecl) and it.name not in scope:
            scope[it.name] = SigInfo(it.name, it.width, it.signed, KIND_REG, it.init)
    return scope


def expr_type(e: Expr, scope: dict) -> tuple:
    """Return (width, signed) of `e`, raising on unresolvable expressions."""
    if isinstance(e, Const):
        if e.width < 1 or e.value < 0 or e.value >> e.width:
            raise WidthMismatchError(f"constant {e.value} does not fit {e.width} bits")
        return e.width, False
    if isinstance(e, Ref):
        info = scope.get(e.name)
        if info is None:
            raise WidthMismatchError(f"unknown identifier {e.name!r}")
        return info.width, info.signed
    if isinstance(e, Unary):
        w, s = expr_type(e.operand, scope)
        if e.op in ("&", "|", "^"):
            return 1, False
        if e.op in ("~", "-"):
            return w, s
        raise WidthMismatchError(f"unknown unary operator {e.op!r}")
    if isinstance(e, Binary):
        lw, ls = expr_type(e.left, scope)
        rw, rs = expr_type(e.right, scope)
        if e.op in COMPARE_OPS or e.op in LOGICAL_OPS:
            return 1, False
        if e.op in SHIFT_OPS:
            return lw, ls
        if e.op in ARITH_OPS or e.op in BITWISE_OPS:
            return max(lw, rw), ls and rs
        raise WidthMismatchError(f"unknown binary operator {e.op!r}")
    if isinstance(e, Cond):
        expr_type(e.cond, scope)
        tw, ts = expr_type(e.if_true, scope)
        fw, fs = expr_type(e.if_false, scope)
        return max(tw, fw), ts and fs
    if isinstance(e, BitSelect):
        base = scope.get(e.name)
        if base is None:
            raise WidthMismatchError(f"unknown identifier {e.name!r}")
        iw, _ = expr_type(e.index, scope)
        if isinstance(e.index, Const) and e.index.value >= base.width:
            raise WidthMismatchError(
                f"bit-select {e.name}[{e.index.value}] out of range")
        return 1, False
    if isinstance(e, PartSelect):
        base = scope.get(e.name)
        if base is None:
            raise WidthMismatchError(f"unknown identifier {e.name!r}")
        if not (0 <= e.lsb <= e.msb < base.width):
            raise WidthMismatchError(
                f"part-select {e.name}[{e.msb}:{e.lsb}] out of range")
        return e.msb - e.lsb + 1, False
    if isinstance(e, Concat):
        if not e.parts:
            raise WidthMismatchError("empty concatenation")
        return sum(expr_type(p, scope)[0] for p in e.parts), False
    raise WidthMismatchError(f"not an expression: {e!r}")


def expr_width(e: Expr, scope: dict) -> int:
    return expr_type(e, scope)[0]


def expr_refs(e: Expr) -> set:
    """All identifiers read by `e`."""
    out = set()
    _collect_refs(e, out)
    return out


def _collect_refs(e, out):
    if isinstance(e, Ref):
        out.add(e.name)
    elif isinstance(e, Unary):
        _collect_refs(e.operand, out)
    elif isinstance(e, Binary):
        _collect_refs(e.left, out)
        _collect_refs(e.right, out)
    elif isinstance(e, Cond):
        _collect_refs(e.cond, out)
        _collect_refs(e.if_true, out)
        _collect_refs(e.if_false, out)
    elif isinstance(e, BitSelect):
        out.add(e.name)
        _collect_refs(e.index, out)
    elif isinstance(e, PartSelect):
        out.add(e.name)
    elif isinstance(e, Concat):
        for p in e.parts:
            _collect_refs(p, out)


def lvalue_name(lv: LValue) -> str:
    if isinstance(lv, (BitSelect, PartSelect)):
        return lv.name
    if isinstance(lv, Ref):
        return lv.name
    raise DesignError(f"not an lvalue: {lv!r}")


def stmt_assigned_names(stmts) -> set:
    """Registers assigned (blocking or non-blocking) anywhere under `stmts`."""
    out = set()
    for s in stmts:
        if isinstance(s, (NonBlocking, Blocking)):
            out.add(lvalue_name(s.target))
        elif isinstance(s, If):
            out |= stmt_assigned_names(s.then_body)
            out |= stmt_assigned_names(s.else_body)
        elif isinstance(s, Case):
            for arm in s.arms:
                out |= stmt_assigned_names(arm.body)
            out |= stmt_assigned_names(s.default)
    return out


def stmt_read_names(stmts) -> set:
    """Identifiers read anywhere under `stmts` (rvalues, conditions, indices)."""
    out = set()
    for s in stmts:
        if isinstance(s, (NonBlocking, Blocking)):
            _collect_refs(s.rhs, out)
            if isinstance(s.target, BitSelect):
                _collect_refs(s.target.index, out)
        elif isinstance(s, If):
            _collect_refs(s.cond, out)
            out |= stmt_read_names(s.then_body)
            out |= stmt_read_names(s.else_body)
        elif isinstance(s, Case):
            _collect_refs(s.subject, out)
            for arm in s.arms:
                out |= stmt_read_names(arm.body)
            out |= stmt_read_names(s.default)
    return out


def count_statements(stmts) -> int:
    n = 0
    for s in stmts:
        n += 1
        if isinstance(s, If):
            n += count_statements(s.then_body) + count_statements(s.else_body)
        elif isinstance(s, Case):
            for arm in s.arms:
                n += count_statements(arm.body)
            n += count_statements(s.default)
    return n


def design_statement_count(design: Design) -> int:
    total = 0
    for m in design.modules:
        for it in m.items:
            if isinstance(it, AlwaysBlock):
                total += count_statements(it.body)
    return total


def reachable_modules(design: Design) -> list:
    """Module names reachable from top via instantiation, top first."""
    mods = module_map(design)
    seen = []
    stack = [design.top]
    visited = set()
    while stack:
        name = stack.pop()
        if name in visited or name not in mods:
            continue
        visited.add(name)
        seen.append(name)
        for it in mods[name].items:
            if isinstance(it, Instance):
                stack.append(it.module)
    return seen


# --------------------------------------------------------------------------
# Tree surgery (immutable rebuilds used by the mutator, faults and reducer)
#
# A statement-list path starts at ("always", item_index) and descends with
# ("then", stmt_index), ("else", stmt_index), ("arm", stmt_index, arm_index)
# or ("default", stmt_index) steps; it addresses a statement list.
# --------------------------------------------------------------------------

def get_stmt_list(mod: ModuleDef, path) -> tuple:
    step = path[0]
    if step[0] != "always":
        raise DesignError(f"path must start at an always block: {path!r}")
    node = mod.items[step[1]]
    if not isinstance(node, AlwaysBlock):
        raise DesignError(f"item {step[1]} is not an always block")
    cur = node.body
    for step in path[1:]:
        kind, idx = step[0], step[1]
        s = cur[idx]
        if kind == "then":
            cur = s.then_body
        elif kind == "else":
            cur = s.else_body
        elif kind == "arm":
            cur = s.arms[step[2]].body
        elif kind == "default":
            cur = s.default
        else:
            raise DesignError(f"bad path step {step!r}")
    return cur


def with_stmt_list(mod: ModuleDef, path, new_list) -> ModuleDef:
    def rebuild(cur, steps):
        if not steps:
            return tuple(new_list)
        kind, idx = steps[0][0], steps[0][1]
        s = cur[idx]
        if kind == "then":
            s2 = If(s.cond, rebuild(s.then_body, steps[1:]), s.else_body)
        elif kind == "else":
            s2 = If(s.cond, s.then_body, rebuild(s.else_body, steps[1:]))
        elif kind == "arm":
            k = steps[0][2]
            arms = list(s.arms)
            arms[k] = CaseArm(arms[k].label, rebuild(arms[k].body, steps[1:]))
            s2 = Case(s.subject, tuple(arms), s.default)
        elif kind == "default":
            s2 = Case(s.subject, s.arms, rebuild(s.default, steps[1:]))
        else:
            raise DesignError(f"bad path step {steps[0]!r}")
        return cur[:idx] + (s2,) + cur[idx + 1:]

    step = path[0]
    ab = mod.items[step[1]]
    new_ab = AlwaysBlock(rebuild(ab.body, path[1:]), ab.clock)
    items = mod.items[:step[1]] + (new_ab,) + mod.items[step[1] + 1:]
    return ModuleDef(mod.name, mod.ports, items)


def with_module(design: Design, new_mod: ModuleDef) -> Design:
    mods = tuple(new_mod if m.name == new_mod.name else m
                 for m in design.modules)
    return Design(mods, design.top)


def iter_stmt_lists(mod: ModuleDef):
    """Yield (path, stmt list) for every statement list in the module."""
    for i, it in enumerate(mod.items):
        if not isinstance(it, AlwaysBlock):
            continue
        stack = [((("always", i),), it.body)]
        while stack:
            path, stmts = stack.pop()
            yield path, stmts
            for j, s in enumerate(stmts):
                if isinstance(s, If):
                    stack.append((path + (("then", j),), s.then_body))
                    if s.else_body:
                        stack.append((path + (("else", j),), s.else_body))
                elif isinstance(s, Case):
                    for k, arm in enumerate(s.arms):
                        stack.append((path + (("arm", j, k),), arm.body))
                    stack.append((path + (("default", j),), s.default))


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------

def _check_expr(e: Expr, scope: dict, clock: Optional[str]):
    expr_type(e, scope)
    if clock is not None and clock in expr_refs(e):
        raise DesignError(f"clock {clock!r} read as data")


def _check_stmts(stmts, scope, clock, mod_name):
    for s in stmts:
        if isinstance(s, (NonBlocking, Blocking)):
            tname = lvalue_name(s.target)
            info = scope.get(tname)
            if info is None:
                raise DesignError(f"{mod_name}: assignment to unknown {tname!r}")
            if info.kind != KIND_REG:
                raise DesignError(
                    f"{mod_name}: always-block assignment target {tname!r} is not a reg")
            if isinstance(s.target, (BitSelect, PartSelect)):
                expr_type(s.target, scope)
            _check_expr(s.rhs, scope, clock)
        elif isinstance(s, If):
            _check_expr(s.cond, scope, clock)
            _check_stmts(s.then_body, scope, clock, mod_name)
            _check_stmts(s.else_body, scope, clock, mod_name)
        elif isinstance(s, Case):
            _check_expr(s.subject, scope, clock)
            sw = expr_width(s.subject, scope)
            for arm in s.arms:
                if arm.label.width != sw:
                    raise DesignError(
                        f"{mod_name}: case label width {arm.label.width} != subject width {sw}")
                _check_stmts(arm.body, scope, clock, mod_name)
            _check_stmts(s.default, scope, clock, mod_name)
        else:
            raise DesignError(f"{mod_name}: not a statement: {s!r}")


def _blocking_partition(mod: ModuleDef):
    """Return (blocking_regs, nonblocking_regs, reg->always index) maps."""
    blocking, nonblocking, owner = set(), set(), {}
    always_idx = 0
    for it in mod.items:
        if not isinstance(it, AlwaysBlock):
            continue

        def walk(stmts):
            for s in stmts:
                if isinstance(s, (NonBlocking, Blocking)):
                    name = lvalue_name(s.target)
                    prev = owner.setdefault(name, always_idx)
                    if prev != always_idx:
                        raise DesignError(
                            f"{mod.name}: reg {name!r} written by two always blocks")
                    (blocking if isinstance(s, Blocking) else nonblocking).add(name)
                elif isinstance(s, If):
                    walk(s.then_body)
                    walk(s.else_body)
                elif isinstance(s, Case):
                    for arm in s.arms:
                        walk(arm.body)
                    walk(s.default)

        walk(it.body)
        always_idx += 1
    return blocking, nonblocking, owner


def check_design(design: Design) -> None:
    """Raise DesignError unless `design` satisfies every structural invariant."""
    mods = {}
    for m in design.modules:
        if m.name in mods:
            raise DesignError(f"duplicate module {m.name!r}")
        mods[m.name] = m
    if design.top not in mods:
        raise DesignError(f"top module {design.top!r} not defined")

    # acyclic instantiation graph
    state = {}  # name -> 1 visiting, 2 done

    def visit(name, trail):
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            raise DesignError(f"recursive instantiation: {' -> '.join(trail + [name])}")
        state[name] = 1
        for it in mods[name].items:
            if isinstance(it, Instance):
                if it.module not in mods:
                    raise DesignError(
                        f"{name}: instance {it.name!r} of undefined module {it.module!r}")
                visit(it.module, trail + [name])
        state[name] = 2

    visit(design.top, [])
    for m in design.modules:
        visit(m.name, [])

    for m in design.modules:
        _check_module(m, mods)


def _check_module(mod: ModuleDef, mods: dict) -> None:
    seen = set()
    for p in mod.ports:
        if p.name in seen:
            raise DesignError(f"{mod.name}: duplicate port {p.name!r}")
        if p.direction not in (INPUT, OUTPUT):
            raise DesignError(f"{mod.name}: bad port direction {p.direction!r}")
        if p.width < 1:
            raise DesignError(f"{mod.name}: port {p.name!r} has width {p.width}")
        seen.add(p.name)

    out_ports = {p.name for p in mod.ports if p.direction == OUTPUT}
    item_names = set()
    for it in mod.items:
        if isinstance(it, (NetDecl, RegDecl)):
            if it.width < 1:
                raise DesignError(f"{mod.name}: {it.name!r} has width {it.width}")
            if isinstance(it, RegDecl) and (it.init < 0 or it.init >> it.width):
                raise DesignError(
                    f"{mod.name}: init of {it.name!r} does not fit {it.width} bits")
            if it.name in item_names:
                raise DesignError(f"{mod.name}: duplicate identifier {it.name!r}")
            if it.name in seen:
                # a RegDecl backing an output port is the one allowed overlap
                if not (isinstance(it, RegDecl) and it.name in out_ports):
                    raise DesignError(f"{mod.name}: duplicate identifier {it.name!r}")
                reg_port = next(p for p in mod.ports if p.name == it.name)
                if reg_port.width != it.width or reg_port.signed != it.signed:
                    raise DesignError(
                        f"{mod.name}: reg {it.name!r} does not match its port declaration")
            item_names.add(it.name)
        elif isinstance(it, Instance):
            if it.name in seen or it.name in item_names:
                raise DesignError(f"{mod.name}: duplicate identifier {it.name!r}")
            item_names.add(it.name)

    scope = module_scope(mod)
    clock = None
    for it in mod.items:
        if isinstance(it, AlwaysBlock):
            if clock is not None and it.clock != clock:
                raise DesignError(f"{mod.name}: multiple clocks")
            clock = it.clock
            info = scope.get(it.clock)
            if info is None or info.kind != KIND_INPUT or info.width != 1:
                raise DesignError(
                    f"{mod.name}: clock {it.clock!r} must be a 1-bit input")

    # net drivers: at most one per net (continuous assigns + instance outputs)
    drivers = {}

    def drive(name, what):
        if name in drivers:
            raise DesignError(
                f"{mod.name}: {name!r} driven by both {drivers[name]} and {what}")
        drivers[name] = what

    for it in mod.items:
        if isinstance(it, ContinuousAssign):
            tname = lvalue_name(it.target)
            info = scope.get(tname)
            if info is None:
                raise DesignError(f"{mod.name}: assign to unknown {tname!r}")
            if info.kind not in (KIND_WIRE, KIND_OUTPUT):
                raise DesignError(
                    f"{mod.name}: continuous assign target {tname!r} is not a net")
            if isinstance(it.target, (BitSelect, PartSelect)):
                raise DesignError(
                    f"{mod.name}: partial continuous assign to {tname!r} unsupported")
            drive(tname, "assign")
            _check_expr(it.rhs, scope, clock)
        elif isinstance(it, AlwaysBlock):
            _check_stmts(it.body, scope, clock, mod.name)
        elif isinstance(it, Instance):
            sub = mods[it.module]
            formals = {p.name: p for p in sub.ports}
            bound = set()
            for pname, actual in it.conns:
                if pname not in formals:
                    raise DesignError(
                        f"{mod.name}: {it.name!r} binds unknown port {pname!r}")
                if pname in bound:
                    raise DesignError(
                        f"{mod.name}: {it.name!r} binds port {pname!r} twice")
                bound.add(pname)
                fp = formals[pname]
                if fp.direction == INPUT:
                    if not isinstance(actual, (Ref, Const)):
                        raise DesignError(
                            f"{mod.name}: input binding {pname!r} must be an identifier or constant")
                    aw, _ = expr_type(actual, scope)
                    if aw != fp.width:
                        raise DesignError(
                            f"{mod.name}: {it.name}.{pname} width {fp.width} bound to width {aw}")
                else:
                    if not isinstance(actual, Ref):
                        raise DesignError(
                            f"{mod.name}: output binding {pname!r} must be an identifier")
                    info = scope.get(actual.name)
                    if info is None or info.kind not in (KIND_WIRE, KIND_OUTPUT):
                        raise DesignError(
                            f"{mod.name}: output binding {pname!r} target must be a net")
                    if info.width != fp.width:
                        raise DesignError(
                            f"{mod.name}: {it.name}.{pname} width {fp.width} bound to width {info.width}")
                    drive(actual.name, f"instance {it.name}")
            missing = set(formals) - bound
            if missing:
                raise DesignError(
                    f"{mod.name}: {it.name!r} leaves ports unbound: {sorted(missing)}")

    # race rules: blocking regs stay private to their always block
    blocking, nonblocking, owner = _blocking_partition(mod)
    both = blocking & nonblocking
    if both:
        raise DesignError(
            f"{mod.name}: regs mix blocking and non-blocking writes: {sorted(both)}")
    if blocking:
        for it in mod.items:
            if isinstance(it, ContinuousAssign):
                bad = expr_refs(it.rhs) & blocking
                if bad:
                    raise DesignError(
                        f"{mod.name}: continuous assign reads blocking regs {sorted(bad)}")
        idx = 0
        for it in mod.items:
            if isinstance(it, AlwaysBlock):
                reads = stmt_read_names(it.body)
                for name in reads & blocking:
                    if owner.get(name) != idx:
                        raise DesignError(
                            f"{mod.name}: blocking reg {name!r} read outside its block")
                idx += 1
        for it in mod.items:
            if isinstance(it, Instance):
                for _, actual in it.conns:
                    if isinstance(actual, Ref) and actual.name in blocking:
                        raise DesignError(
                            f"{mod.name}: blocking reg {actual.name!r} escapes via instance")
        for p in mod.ports:
            if p.direction == OUTPUT and p.name in blocking:
                raise DesignError(
                    f"{mod.name}: blocking reg {p.name!r} drives an output port")


# --------------------------------------------------------------------------
# Flattening (hierarchy elaboration)
# --------------------------------------------------------------------------

SEP = "."  # illegal in Verilog identifiers, so flat names cannot collide


@dataclass(frozen=True)
class FlatDesign:
    """Single-module view of a hierarchical design.

    signals: name -> SigInfo (flat names use `.` between instance path parts)
    assigns: tuple of (target name, Expr over flat names)
    always:  tuple of AlwaysBlock with flat names
    inputs/outputs: top-level port names in declaration order
    clock: name of the clock input, or None for purely combinational designs
    """
    signals: tuple          # of SigInfo
    assigns: tuple
    always: tuple
    inputs: tuple
    outputs: tuple
    clock: Optional[str]

    def scope(self) -> dict:
        return {s.name: s for s in self.signals}


def _rename_expr(e: Expr, sub: dict) -> Expr:
    if isinstance(e, Const):
        return e
    if isinstance(e, Ref):
        return sub[e.name]
    if isinstance(e, Unary):
        return Unary(e.op, _rename_expr(e.operand, sub))
    if isinstance(e, Binary):
        return Binary(e.op, _rename_expr(e.left, sub), _rename_expr(e.right, sub))
    if isinstance(e, Cond):
        return Cond(_rename_expr(e.cond, sub), _rename_expr(e.if_true, sub),
                    _rename_expr(e.if_false, sub))
    if isinstance(e, BitSelect):
        base = sub[e.name]
        return BitSelect(base.name, _rename_expr(e.index, sub))
    if isinstance(e, PartSelect):
        base = sub[e.name]
        return PartSelect(base.name, e.msb, e.lsb)
    if isinstance(e, Concat):
        return Concat(tuple(_rename_expr(p, sub) for p in e.parts))
    raise DesignError(f"not an expression: {e!r}")


def _rename_stmts(stmts, sub):
    out = []
    for s in stmts:
        if isinstance(s, (NonBlocking, Blocking)):
            tgt = _rename_expr(s.target, sub)
            klass = NonBlocking if isinstance(s, NonBlocking) else Blocking
            out.append(klass(tgt, _rename_expr(s.rhs, sub)))
        elif isinstance(s, If):
            out.append(If(_rename_expr(s.cond, sub),
                          _rename_stmts(s.then_body, sub),
                          _rename_stmts(s.else_body, sub)))
        elif isinstance(s, Case):
            out.append(Case(_rename_expr(s.subject, sub),
                            tuple(CaseArm(a.label, _rename_stmts(a.body, sub))
                                  for a in s.arms),
                            _rename_stmts(s.default, sub)))
    return tuple(out)


@functools.lru_cache(maxsize=256)
def flatten_design(design: Design) -> FlatDesign:
    """Elaborate the hierarchy into a single flat namespace.

    Instance input ports become alias assigns formal := actual; output
    bindings drive the parent net from the child's signal. The design must
    already satisfy check_design.
    """
    mods = module_map(design)
    signals = []
    assigns = []
    always = []

    def emit(mod: ModuleDef, prefix: str, bindings: dict):
        scope = module_scope(mod)
        sub = {}
        for name, info in scope.items():
            if name in bindings:
                sub[name] = bindings[name]
            else:
                flat = prefix + name
                sub[name] = Ref(flat)
                signals.append(SigInfo(flat, info.width, info.signed,
                                       info.kind if prefix == "" else
                                       (KIND_REG if info.kind == KIND_REG else KIND_WIRE),
                                       info.init))
        for it in mod.items:
            if isinstance(it, ContinuousAssign):
                assigns.append((sub[lvalue_name(it.target)].name,
                                _rename_expr(it.rhs, sub)))
            elif isinstance(it, AlwaysBlock):
                clk_flat = sub[it.clock]
                always.append(AlwaysBlock(_rename_stmts(it.body, sub),
                                          clk_flat.name))
            elif isinstance(it, Instance):
                child = mods[it.module]
                child_prefix = prefix + it.name + SEP
                child_bindings = {}
                conns = dict(it.conns)
                child_scope = module_scope(child)
                for p in child.ports:
                    actual = conns[p.name]
                    flat_actual = (_rename_expr(actual, sub)
                                   if isinstance(actual, Ref) else actual)
                    if p.direction == INPUT:
                        # the child-side name becomes a wire aliased to the actual
                        flat_formal = child_prefix + p.name
                        signals.append(SigInfo(flat_formal, p.width, p.signed,
                                               KIND_WIRE))
                        assigns.append((flat_formal, flat_actual))
                        child_bindings[p.name] = Ref(flat_formal)
                    else:
                        # child keeps its own signal; parent net is driven by it
                        flat_formal = child_prefix + p.name
                        info = child_scope[p.name]
                        signals.append(SigInfo(flat_formal, p.width, p.signed,
                                               KIND_REG if info.kind == KIND_REG
                                               else KIND_WIRE, info.init))
                        assigns.append((flat_actual.name, Ref(flat_formal)))
                        child_bindings[p.name] = Ref(flat_formal)
                emit(child, child_prefix, child_bindings)

    top = mods[design.top]
    emit(top, "", {})

    clock = None
    for ab in always:
        clock = ab.clock
        break
    inputs = tuple(p.name for p in top.ports if p.direction == INPUT)
    outputs = tuple(p.name for p in top.ports if p.direction == OUTPUT)
    return FlatDesign(tuple(signals), tuple(assigns), tuple(always),
                      inputs, outputs, clock)
