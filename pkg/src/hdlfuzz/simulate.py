"""Reference cycle-accurate simulator, traces and valuation profiling.

Per cycle: inputs are applied, continuous assigns settle in topological
order, always blocks execute (non-blocking writes are collected), then all
non-blocking updates commit simultaneously. Registers power up at their
declared init values. Two-state semantics only.

Designs are compiled to straight-line Python for speed; a structural
interpreter (`simulate_interpreted`) implements the same semantics
independently and is used as a cross-check oracle in the tests.
"""

import functools
from dataclasses import dataclass

from .ast import (
    AlwaysBlock, Binary, BitSelect, Blocking, Case, Concat, Cond, Const,
    Design, If, Instance, NonBlocking, PartSelect, Ref, Unary, SEP, KIND_REG,
    expr_refs, expr_type, flatten_design, lvalue_name, module_map,
    module_scope,
)
from .errors import CombLoopError, WidthMismatchError
from .textio import dump_bit_table, parse_bit_table

# --------------------------------------------------------------------------
# Traces
# --------------------------------------------------------------------------

EQUIVALENT = "equivalent"
MISMATCH = "mismatch"
MISMATCHED_INTERFACE = "mismatched-interface"


@dataclass(frozen=True)
class Trace:
    signals: tuple  # of (name, width)
    rows: tuple     # one tuple of values per cycle

    @property
    def cycles(self):
        return len(self.rows)


@dataclass(frozen=True)
class TraceVerdict:
    kind: str
    cycle: int = None
    signal: str = None
    expected: int = None
    actual: int = None
    detail: str = ""

    @property
    def is_equivalent(self):
        return self.kind == EQUIVALENT


def dump_trace(trace: Trace) -> str:
    return dump_bit_table(trace.signals, trace.rows)


def parse_trace(text: str) -> Trace:
    signals, rows = parse_bit_table(text)
    return Trace(signals, rows)


def compare_traces(a: Trace, b: Trace) -> TraceVerdict:
    if a.signals != b.signals:
        return TraceVerdict(MISMATCHED_INTERFACE,
                            detail=f"{a.signals} vs {b.signals}")
    if len(a.rows) != len(b.rows):
        return TraceVerdict(MISMATCH, cycle=min(len(a.rows), len(b.rows)),
                            detail="trace lengths differ")
    for cycle, (ra, rb) in enumerate(zip(a.rows, b.rows)):
        if ra == rb:
            continue
        for (name, _), va, vb in zip(a.signals, ra, rb):
            if va != vb:
                return TraceVerdict(MISMATCH, cycle=cycle, signal=name,
                                    expected=va, actual=vb)
    return TraceVerdict(EQUIVALENT)


# --------------------------------------------------------------------------
# Shared semantic helpers (used by compiled code and the interpreter)
# --------------------------------------------------------------------------

def _sv(x, w):
    return x - (1 << w) if x >> (w - 1) else x


def _sx(x, fr, to):
    if x >> (fr - 1):
        return x | (((1 << to) - 1) ^ ((1 << fr) - 1))
    return x


def _shl(x, s, w):
    if s >= w:
        return 0
    return (x << s) & ((1 << w) - 1)


def _ashr(x, s, w):
    v = _sv(x, w)
    if s >= w:
        return ((1 << w) - 1) if v < 0 else 0
    return (v >> s) & ((1 << w) - 1)


_HELPERS = {"_sv": _sv, "_sx": _sx, "_shl": _shl, "_ashr": _ashr}


# --------------------------------------------------------------------------
# Compiled simulator
# --------------------------------------------------------------------------

class _Codegen:
    def __init__(self, scope, names):
        self.scope = scope      # flat name -> SigInfo
        self.names = names      # flat name -> python var

    def adapt(self, code_ws, target_width):
        code, w, s = code_ws
        if w == target_width:
            return code
        if w > target_width:
            return f"(({code}) & {(1 << target_width) - 1})"
        if s:
            return f"_sx({code}, {w}, {target_width})"
        return code

    def ext(self, code, w, s, to, want_signed):
        if w == to:
            return code
        if want_signed and s:
            return f"_sx({code}, {w}, {to})"
        return code

    def expr(self, e):
        """Return (python code, width, signed)."""
        if isinstance(e, Const):
            return str(e.value), e.width, False
        if isinstance(e, Ref):
            info = self.scope[e.name]
            return self.names[e.name], info.width, info.signed
        if isinstance(e, Unary):
            c, w, s = self.expr(e.operand)
            if e.op == "~":
                return f"({c} ^ {(1 << w) - 1})", w, s
            if e.op == "-":
                return f"((-({c})) & {(1 << w) - 1})", w, s
            if e.op == "&":
                return f"(1 if {c} == {(1 << w) - 1} else 0)", 1, False
            if e.op == "|":
                return f"(1 if {c} != 0 else 0)", 1, False
            if e.op == "^":
                return f"(({c}).bit_count() & 1)", 1, False
            raise WidthMismatchError(f"unknown unary {e.op!r}")
        if isinstance(e, Binary):
            lc, lw, ls = self.expr(e.left)
            rc, rw, rs = self.expr(e.right)
            op = e.op
            if op in ("&", "|", "^"):
                w = max(lw, rw)
                s = ls and rs
                a = self.ext(lc, lw, ls, w, s)
                b = self.ext(rc, rw, rs, w, s)
                return f"({a} {op} {b})", w, s
            if op in ("+", "-", "*"):
                w = max(lw, rw)
                s = ls and rs
                a = self.ext(lc, lw, ls, w, s)
                b = self.ext(rc, rw, rs, w, s)
                return f"(({a} {op} {b}) & {(1 << w) - 1})", w, s
            if op == "<<":
                return f"_shl({lc}, {rc}, {lw})", lw, ls
            if op == ">>":
                return f"({lc} >> {rc})", lw, ls
            if op == ">>>":
                if ls:
                    return f"_ashr({lc}, {rc}, {lw})", lw, True
                return f"({lc} >> {rc})", lw, False
            if op in ("==", "!=", "<", "<=", ">", ">="):
                both_signed = ls and rs
                a = f"_sv({lc}, {lw})" if both_signed else lc
                b = f"_sv({rc}, {rw})" if both_signed else rc
                return f"(1 if {a} {op} {b} else 0)", 1, False
            if op == "&&":
                return f"(1 if ({lc} != 0) and ({rc} != 0) else 0)", 1, False
            if op == "||":
                return f"(1 if ({lc} != 0) or ({rc} != 0) else 0)", 1, False
            raise WidthMismatchError(f"unknown binary {op!r}")
        if isinstance(e, Cond):
            cc, _, _ = self.expr(e.cond)
            tc, tw, ts = self.expr(e.if_true)
            fc, fw, fs = self.expr(e.if_false)
            w = max(tw, fw)
            s = ts and fs
            a = self.ext(tc, tw, ts, w, s)
            b = self.ext(fc, fw, fs, w, s)
            return f"(({a}) if {cc} else ({b}))", w, s
        if isinstance(e, BitSelect):
            base = self.names[e.name]
            ic, _, _ = self.expr(e.index)
            return f"(({base} >> {ic}) & 1)", 1, False
        if isinstance(e, PartSelect):
            base = self.names[e.name]
            w = e.msb - e.lsb + 1
            return f"(({base} >> {e.lsb}) & {(1 << w) - 1})", w, False
        if isinstance(e, Concat):
            parts = [self.expr(p) for p in e.parts]
            total = sum(w for _, w, _ in parts)
            chunks = []
            off = total
            for c, w, _ in parts:
                off -= w
                chunks.append(f"(({c}) << {off})" if off else f"({c})")
            return "(" + " | ".join(chunks) + ")", total, False
        raise WidthMismatchError(f"not an expression: {e!r}")

    def assign_code(self, target, rhs, current):
        """Lines updating `current(name) -> var` for the assignment target."""
        rhs_cws = self.expr(rhs)
        name = lvalue_name(target)
        var = current(name)
        width = self.scope[name].width
        if isinstance(target, Ref):
            return [f"{var} = {self.adapt(rhs_cws, width)}"]
        if isinstance(target, BitSelect):
            bit = self.adapt(rhs_cws, 1)
            ic, _, _ = self.expr(target.index)
            return [
                f"_i = {ic}",
                f"if _i < {width}:",
                f"    {var} = ({var} & ~(1 << _i)) | (({bit}) << _i)",
            ]
        if isinstance(target, PartSelect):
            w = target.msb - target.lsb + 1
            chunk = self.adapt(rhs_cws, w)
            hole = ((1 << w) - 1) << target.lsb
            return [f"{var} = ({var} & {~hole & ((1 << width) - 1)})"
                    f" | (({chunk}) << {target.lsb})"]
        raise WidthMismatchError(f"bad lvalue {target!r}")


def _order_assigns(assigns):
    """Topologically order continuous assigns by net-to-net dependency."""
    by_target = {t: (t, rhs) for t, rhs in assigns}
    deps = {}
    for t, rhs in assigns:
        deps[t] = {r for r in expr_refs(rhs) if r in by_target}
    order = []
    ready = sorted(t for t, d in deps.items() if not d)
    remaining = {t: set(d) for t, d in deps.items() if d}
    users = {}
    for t, d in remaining.items():
        for dep in d:
            users.setdefault(dep, []).append(t)
    while ready:
        t = ready.pop()
        order.append(by_target[t])
        for u in users.get(t, ()):
            remaining[u].discard(t)
            if not remaining[u]:
                del remaining[u]
                ready.append(u)
    if remaining:
        raise CombLoopError(f"combinational loop through {sorted(remaining)[:4]}")
    return order


class CompiledSim:
    """Executable form of a flat design."""

    def __init__(self, design: Design):
        flat = flatten_design(design)
        self.flat = flat
        scope = flat.scope()
        self.scope = scope
        names = {}
        for i, info in enumerate(flat.signals):
            names[info.name] = f"v{i}"
        self.names = names

        self.inputs = tuple((n, scope[n].width) for n in flat.inputs
                            if n != flat.clock)
        self.outputs = tuple((n, scope[n].width) for n in flat.outputs)
        self.regs = tuple(info.name for info in flat.signals
                          if info.kind == KIND_REG)
        self.init_state = tuple(scope[r].init for r in self.regs)
        self.signal_order = tuple(info.name for info in flat.signals)

        # classify registers: non-blocking targets get shadow next-state vars
        nb_regs = set()
        for ab in flat.always:
            self._collect_nb(ab.body, nb_regs)
        self.nb_regs = nb_regs

        src = self._emit()
        self.source = src
        env = dict(_HELPERS)
        exec(compile(src, "<hdl-sim>", "exec"), env)
        self._step = env["_step"]
        self._step_full = env["_step_full"]

    @staticmethod
    def _collect_nb(stmts, out):
        for s in stmts:
            if isinstance(s, NonBlocking):
                out.add(lvalue_name(s.target))
            elif isinstance(s, If):
                CompiledSim._collect_nb(s.then_body, out)
                CompiledSim._collect_nb(s.else_body, out)
            elif isinstance(s, Case):
                for arm in s.arms:
                    CompiledSim._collect_nb(arm.body, out)
                CompiledSim._collect_nb(s.default, out)

    def _emit(self):
        gen = _Codegen(self.scope, self.names)
        body = []
        if self.inputs:
            body.append("(" + ", ".join(self.names[n] for n, _ in self.inputs)
                        + ",) = _in")
        if self.regs:
            body.append("(" + ", ".join(self.names[r] for r in self.regs)
                        + ",) = _st")
        # clock nets are never read as data; pin them to 0
        for info in self.flat.signals:
            if info.name == self.flat.clock:
                body.append(f"{self.names[info.name]} = 0")

        # undriven nets (possible after reduction deletes a driver) read as 0
        driven = {t for t, _ in self.flat.assigns}
        driven.update(n for n, _ in self.inputs)
        driven.update(self.regs)
        if self.flat.clock:
            driven.add(self.flat.clock)
        undriven = [info.name for info in self.flat.signals
                    if info.name not in driven]
        if undriven:
            body.append(" = ".join(self.names[n] for n in undriven) + " = 0")

        for target, rhs in _order_assigns(self.flat.assigns):
            w = self.scope[target].width
            body.append(f"{self.names[target]} = {gen.adapt(gen.expr(rhs), w)}")

        shadow = {r: f"n_{self.names[r]}" for r in sorted(self.nb_regs)}
        for r, sv in shadow.items():
            body.append(f"{sv} = {self.names[r]}")

        def current(name):
            return shadow.get(name, self.names[name])

        temp = [0]

        def emit_stmts(stmts, indent):
            pad = "    " * indent
            if not stmts:
                body.append(pad + "pass")
                return
            for s in stmts:
                if isinstance(s, NonBlocking):
                    for line in gen.assign_code(s.target, s.rhs, current):
                        body.append(pad + line)
                elif isinstance(s, Blocking):
                    for line in gen.assign_code(s.target, s.rhs,
                                                lambda n: self.names[n]):
                        body.append(pad + line)
                elif isinstance(s, If):
                    cc, _, _ = gen.expr(s.cond)
                    body.append(f"{pad}if {cc}:")
                    emit_stmts(s.then_body, indent + 1)
                    if s.else_body:
                        body.append(f"{pad}else:")
                        emit_stmts(s.else_body, indent + 1)
                elif isinstance(s, Case):
                    temp[0] += 1
                    tv = f"_t{temp[0]}"
                    sc, _, _ = gen.expr(s.subject)
                    body.append(f"{pad}{tv} = {sc}")
                    first = True
                    for arm in s.arms:
                        kw = "if" if first else "elif"
                        body.append(f"{pad}{kw} {tv} == {arm.label.value}:")
                        emit_stmts(arm.body, indent + 1)
                        first = False
                    if first:
                        body.append(f"{pad}if True: pass")
                    body.append(f"{pad}else:")
                    emit_stmts(s.default, indent + 1)

        for ab in self.flat.always:
            emit_stmts(ab.body, 0)
        return self._assemble(body)

    def _assemble(self, body):
        outs = "(" + ", ".join(self.names[n] for n, _ in self.outputs) + ("," if self.outputs else "") + ")"
        nexts = []
        for r in self.regs:
            nexts.append(f"n_{self.names[r]}" if r in self.nb_regs
                         else self.names[r])
        nxt = "(" + ", ".join(nexts) + ("," if nexts else "") + ")"
        full = "(" + ", ".join(self.names[n] for n in self.signal_order) + ("," if self.signal_order else "") + ")"

        lines = ["def _step(_in, _st):"]
        lines += ["    " + b for b in body]
        lines.append(f"    return {outs}, {nxt}")
        lines.append("def _step_full(_in, _st):")
        lines += ["    " + b for b in body]
        lines.append(f"    return {outs}, {nxt}, {full}")
        return "\n".join(lines) + "\n"

    def run(self, rows, full=False):
        state = self.init_state
        out_rows = []
        valuations = [] if full else None
        step = self._step_full if full else self._step
        for row in rows:
            if full:
                outs, state, vals = step(row, state)
                valuations.append(vals)
            else:
                outs, state = step(row, state)
            out_rows.append(outs)
        return out_rows, valuations


@functools.lru_cache(maxsize=128)
def compile_design(design: Design) -> CompiledSim:
    return CompiledSim(design)


def _check_stimulus(sim: CompiledSim, stim):
    if tuple(stim.signals) != sim.inputs:
        raise WidthMismatchError(
            f"stimulus drives {stim.signals}, design needs {sim.inputs}")


def simulate(design: Design, stim) -> Trace:
    sim = compile_design(design)
    _check_stimulus(sim, stim)
    rows, _ = sim.run(stim.rows)
    return Trace(sim.outputs, tuple(rows))


def simulate_full(design: Design, stim):
    """Trace plus the per-cycle valuation of every flat signal."""
    sim = compile_design(design)
    _check_stimulus(sim, stim)
    rows, vals = sim.run(stim.rows, full=True)
    return Trace(sim.outputs, tuple(rows)), vals, sim.signal_order


# --------------------------------------------------------------------------
# Structural interpreter (independent oracle; also used for guard checks)
# --------------------------------------------------------------------------

def eval_expr(e, scope, values):
    """Interpret `e` under `values` using the same semantics as compiled code."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Ref):
        return values[e.name]
    if isinstance(e, Unary):
        v = eval_expr(e.operand, scope, values)
        w, s = expr_type(e.operand, scope)
        if e.op == "~":
            return v ^ ((1 << w) - 1)
        if e.op == "-":
            return (-v) & ((1 << w) - 1)
        if e.op == "&":
            return 1 if v == (1 << w) - 1 else 0
        if e.op == "|":
            return 1 if v != 0 else 0
        if e.op == "^":
            return v.bit_count() & 1
    if isinstance(e, Binary):
        lv = eval_expr(e.left, scope, values)
        rv = eval_expr(e.right, scope, values)
        lw, ls = expr_type(e.left, scope)
        rw, rs = expr_type(e.right, scope)
        op = e.op
        if op in ("&", "|", "^", "+", "-", "*"):
            w = max(lw, rw)
            s = ls and rs
            if s:
                lv = _sx(lv, lw, w) if lw < w else lv
                rv = _sx(rv, rw, w) if rw < w else rv
            if op == "&":
                return lv & rv
            if op == "|":
                return lv | rv
            if op == "^":
                return lv ^ rv
            if op == "+":
                return (lv + rv) & ((1 << w) - 1)
            if op == "-":
                return (lv - rv) & ((1 << w) - 1)
            return (lv * rv) & ((1 << w) - 1)
        if op == "<<":
            return _shl(lv, rv, lw)
        if op == ">>":
            return lv >> rv
        if op == ">>>":
            return _ashr(lv, rv, lw) if ls else lv >> rv
        if op in ("==", "!=", "<", "<=", ">", ">="):
            if ls and rs:
                lv, rv = _sv(lv, lw), _sv(rv, rw)
            table = {
                "==": lv == rv, "!=": lv != rv, "<": lv < rv,
                "<=": lv <= rv, ">": lv > rv, ">=": lv >= rv,
            }
            return 1 if table[op] else 0
        if op == "&&":
            return 1 if lv != 0 and rv != 0 else 0
        if op == "||":
            return 1 if lv != 0 or rv != 0 else 0
    if isinstance(e, Cond):
        c = eval_expr(e.cond, scope, values)
        tv = eval_expr(e.if_true, scope, values)
        fv = eval_expr(e.if_false, scope, values)
        tw, ts = expr_type(e.if_true, scope)
        fw, fs = expr_type(e.if_false, scope)
        w = max(tw, fw)
        if ts and fs:
            tv = _sx(tv, tw, w) if tw < w else tv
            fv = _sx(fv, fw, w) if fw < w else fv
        return tv if c else fv
    if isinstance(e, BitSelect):
        base = values[e.name]
        idx = eval_expr(e.index, scope, values)
        return (base >> idx) & 1
    if isinstance(e, PartSelect):
        base = values[e.name]
        return (base >> e.lsb) & ((1 << (e.msb - e.lsb + 1)) - 1)
    if isinstance(e, Concat):
        acc = 0
        for p in e.parts:
            w, _ = expr_type(p, scope)
            acc = (acc << w) | eval_expr(p, scope, values)
        return acc
    raise WidthMismatchError(f"cannot evaluate {e!r}")


def _interp_assign(target, rhs, scope, values, dest):
    name = lvalue_name(target)
    width = scope[name].width
    rv = eval_expr(rhs, scope, values)
    rw, rs = expr_type(rhs, scope)
    if rw > width:
        rv &= (1 << width) - 1
    elif rw < width and rs:
        rv = _sx(rv, rw, width)
    if isinstance(target, Ref):
        dest[name] = rv
    elif isinstance(target, BitSelect):
        idx = eval_expr(target.index, scope, values)
        if idx < width:
            cur = dest[name]
            dest[name] = (cur & ~(1 << idx)) | ((rv & 1) << idx)
    else:
        w = target.msb - target.lsb + 1
        hole = ((1 << w) - 1) << target.lsb
        cur = dest[name]
        dest[name] = (cur & ~hole & ((1 << width) - 1)) | ((rv & ((1 << w) - 1)) << target.lsb)


def _interp_stmts(stmts, scope, values, pending):
    for s in stmts:
        if isinstance(s, NonBlocking):
            # reads see pre-edge values; writes land in `pending`
            _interp_assign(s.target, s.rhs, scope,
                           values, _PendingView(values, pending, s.target))
        elif isinstance(s, Blocking):
            _interp_assign(s.target, s.rhs, scope, values, values)
        elif isinstance(s, If):
            if eval_expr(s.cond, scope, values):
                _interp_stmts(s.then_body, scope, values, pending)
            else:
                _interp_stmts(s.else_body, scope, values, pending)
        elif isinstance(s, Case):
            subj = eval_expr(s.subject, scope, values)
            for arm in s.arms:
                if subj == arm.label.value:
                    _interp_stmts(arm.body, scope, values, pending)
                    break
            else:
                _interp_stmts(s.default, scope, values, pending)


class _PendingView(dict):
    """Write adapter: partial writes read the pending value if present."""

    def __init__(self, values, pending, target):
        super().__init__()
        self._values = values
        self._pending = pending
        name = lvalue_name(target)
        self[name] = pending.get(name, values[name])

    def __setitem__(self, key, value):
        self._pending[key] = value
        super().__setitem__(key, value)


def simulate_interpreted(design: Design, stim) -> Trace:
    """Tree-walking reference simulation (slow; used as a test oracle)."""
    flat = flatten_design(design)
    scope = flat.scope()
    inputs = tuple((n, scope[n].width) for n in flat.inputs if n != flat.clock)
    if tuple(stim.signals) != inputs:
        raise WidthMismatchError("stimulus does not match design inputs")
    assigns = _order_assigns(flat.assigns)

    values = {}
    for info in flat.signals:
        values[info.name] = info.init if info.kind == KIND_REG else 0
    rows = []
    outputs = tuple((n, scope[n].width) for n in flat.outputs)
    for row in stim.rows:
        for (name, _), v in zip(inputs, row):
            values[name] = v
        if flat.clock:
            values[flat.clock] = 0
        for target, rhs in assigns:
            _interp_assign(Ref(target), rhs, scope, values, values)
        pending = {}
        for ab in flat.always:
            _interp_stmts(ab.body, scope, values, pending)
        rows.append(tuple(values[n] for n, _ in outputs))
        values.update(pending)
    return Trace(outputs, tuple(rows))


# --------------------------------------------------------------------------
# Valuation profiling
# --------------------------------------------------------------------------

@dataclass
class VarFacts:
    name: str
    width: int
    signed: bool
    sequential: bool
    min_u: int
    max_u: int
    const_mask: int   # bits that never changed
    const_val: int    # their frozen values (masked)
    distinct: int
    saturated: bool   # distinct-value tracking capped out

    @property
    def is_constant(self):
        return self.const_mask == (1 << self.width) - 1


@dataclass
class ValuationProfile:
    cycles: int
    facts: dict  # (module name, var name) -> VarFacts

    def for_module(self, module_name):
        return {var: f for (m, var), f in self.facts.items()
                if m == module_name}


def instance_contexts(design: Design) -> dict:
    """Module name -> list of flat-name prefixes where it is instantiated."""
    mods = module_map(design)
    out = {}

    def rec(name, prefix):
        out.setdefault(name, []).append(prefix)
        for it in mods[name].items:
            if isinstance(it, Instance):
                rec(it.module, prefix + it.name + SEP)

    rec(design.top, "")
    return out


_DISTINCT_CAP = 64


def profile(design: Design, stim) -> ValuationProfile:
    trace_unused, valuations, order = simulate_full(design, stim)
    index = {name: i for i, name in enumerate(order)}
    contexts = instance_contexts(design)
    mods = module_map(design)

    slots = []  # (key, flat indices, VarFacts seed data)
    for mod_name, prefixes in contexts.items():
        scope = module_scope(mods[mod_name])
        clocks = {it.clock for it in mods[mod_name].items
                  if isinstance(it, AlwaysBlock)}
        for var, info in scope.items():
            if var in clocks:
                continue
            idxs = [index[p + var] for p in prefixes]
            slots.append(((mod_name, var), info, idxs))

    facts = {}
    for key, info, idxs in slots:
        first = None
        mask = (1 << info.width) - 1
        mn = mx = None
        seen = set()
        saturated = False
        for vals in valuations:
            for i in idxs:
                v = vals[i]
                if first is None:
                    first = v
                    mn = mx = v
                else:
                    mask &= ~(v ^ first)
                    if v < mn:
                        mn = v
                    if v > mx:
                        mx = v
                if not saturated:
                    seen.add(v)
                    if len(seen) >= _DISTINCT_CAP:
                        saturated = True
        if first is None:
            continue
        mask &= (1 << info.width) - 1
        facts[key] = VarFacts(
            name=key[1], width=info.width, signed=info.signed,
            sequential=(info.kind == KIND_REG),
            min_u=mn, max_u=mx, const_mask=mask, const_val=first & mask,
            distinct=len(seen), saturated=saturated)
    return ValuationProfile(cycles=len(stim.rows), facts=facts)


def check_guards(design: Design, stim, guards) -> list:
    """Re-simulate and evaluate `(module, expr)` guards at every cycle.

    Returns a list of (module, cycle, prefix, expr) violations; an empty
    list certifies every guard true throughout the stimulus in every
    instance of its module.
    """
    _, valuations, order = simulate_full(design, stim)
    index = {name: i for i, name in enumerate(order)}
    contexts = instance_contexts(design)
    mods = module_map(design)
    violations = []
    for module_name, expr in guards:
        scope = module_scope(mods[module_name])
        refs = sorted(expr_refs(expr))
        for prefix in contexts.get(module_name, ()):
            idxs = {r: index[prefix + r] for r in refs}
            for cycle, vals in enumerate(valuations):
                env = {r: vals[i] for r, i in idxs.items()}
                if not eval_expr(expr, scope, env):
                    violations.append((module_name, cycle, prefix, expr))
                    break
    return violations
