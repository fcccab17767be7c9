"""Bounded equivalence: SMT-LIB2 miter export and exhaustive checking.

Both designs are unrolled a fixed number of cycles from their reset state
with shared symbolic inputs; the miter asserts that some output differs in
some cycle, so `unsat` certifies equivalence over the horizon. The encoding
mirrors the simulator's semantics operator by operator, and the exhaustive
checker (which drives the simulator over every input assignment) provides
the independent verdict the miter is validated against.
"""

import shutil
import subprocess
from dataclasses import dataclass

from .ast import (
    Binary, BitSelect, Blocking, Case, Concat, Cond, Const, Design, If,
    NonBlocking, PartSelect, Ref, Unary, flatten_design, lvalue_name,
)
from .errors import ProfiledGuardError, UnsupportedConstructError
from .simulate import _order_assigns, compile_design

SOLVERS = ("z3", "cvc5", "cvc4", "bitwuzla", "boolector", "yices-smt2")


def _bv(value, width):
    return f"(_ bv{value} {width})"


def _zext(term, fr, to):
    return term if to == fr else f"((_ zero_extend {to - fr}) {term})"


def _sext(term, fr, to):
    return term if to == fr else f"((_ sign_extend {to - fr}) {term})"


def _ext(term, fr, to, signed):
    return _sext(term, fr, to) if signed else _zext(term, fr, to)


def _nonzero(term, width):
    return f"(distinct {term} {_bv(0, width)})"


def _bool2bv(term):
    return f"(ite {term} {_bv(1, 1)} {_bv(0, 1)})"


class _SmtExpr:
    def __init__(self, scope):
        self.scope = scope

    def expr(self, e, env):
        """Return (term, width, signed), mirroring simulator semantics."""
        if isinstance(e, Const):
            return _bv(e.value, e.width), e.width, False
        if isinstance(e, Ref):
            info = self.scope[e.name]
            return env[e.name], info.width, info.signed
        if isinstance(e, Unary):
            t, w, s = self.expr(e.operand, env)
            if e.op == "~":
                return f"(bvnot {t})", w, s
            if e.op == "-":
                return f"(bvneg {t})", w, s
            if e.op == "&":
                return _bool2bv(f"(= {t} {_bv((1 << w) - 1, w)})"), 1, False
            if e.op == "|":
                return _bool2bv(_nonzero(t, w)), 1, False
            if e.op == "^":
                bits = [f"((_ extract {i} {i}) {t})" for i in range(w)]
                acc = bits[0]
                for b in bits[1:]:
                    acc = f"(bvxor {acc} {b})"
                return acc, 1, False
            raise UnsupportedConstructError(f"unary {e.op}", 0, 0)
        if isinstance(e, Binary):
            lt, lw, ls = self.expr(e.left, env)
            rt, rw, rs = self.expr(e.right, env)
            op = e.op
            if op in ("&", "|", "^", "+", "-", "*"):
                w = max(lw, rw)
                s = ls and rs
                a = _ext(lt, lw, w, s and ls)
                b = _ext(rt, rw, w, s and rs)
                fn = {"&": "bvand", "|": "bvor", "^": "bvxor",
                      "+": "bvadd", "-": "bvsub", "*": "bvmul"}[op]
                return f"({fn} {a} {b})", w, s
            if op in ("<<", ">>", ">>>"):
                w = max(lw, rw)
                amt = _zext(rt, rw, w)
                if op == "<<":
                    a = _zext(lt, lw, w)
                    t = f"(bvshl {a} {amt})"
                elif op == ">>":
                    a = _zext(lt, lw, w)
                    t = f"(bvlshr {a} {amt})"
                else:
                    if ls:
                        a = _sext(lt, lw, w)
                        t = f"(bvashr {a} {amt})"
                    else:
                        a = _zext(lt, lw, w)
                        t = f"(bvlshr {a} {amt})"
                if w > lw:
                    t = f"((_ extract {lw - 1} 0) {t})"
                return t, lw, ls
            if op in ("==", "!=", "<", "<=", ">", ">="):
                both = ls and rs
                w = max(lw, rw)
                a = _ext(lt, lw, w, both)
                b = _ext(rt, rw, w, both)
                if op == "==":
                    cond = f"(= {a} {b})"
                elif op == "!=":
                    cond = f"(distinct {a} {b})"
                else:
                    fn = {"<": "bvslt", "<=": "bvsle",
                          ">": "bvsgt", ">=": "bvsge"} if both else \
                         {"<": "bvult", "<=": "bvule",
                          ">": "bvugt", ">=": "bvuge"}
                    cond = f"({fn[op]} {a} {b})"
                return _bool2bv(cond), 1, False
            if op == "&&":
                return _bool2bv(f"(and {_nonzero(lt, lw)} {_nonzero(rt, rw)})"), 1, False
            if op == "||":
                return _bool2bv(f"(or {_nonzero(lt, lw)} {_nonzero(rt, rw)})"), 1, False
            raise UnsupportedConstructError(f"binary {op}", 0, 0)
        if isinstance(e, Cond):
            ct, cw, _ = self.expr(e.cond, env)
            tt, tw, ts = self.expr(e.if_true, env)
            ft, fw, fs = self.expr(e.if_false, env)
            w = max(tw, fw)
            s = ts and fs
            a = _ext(tt, tw, w, s and ts)
            b = _ext(ft, fw, w, s and fs)
            return f"(ite {_nonzero(ct, cw)} {a} {b})", w, s
        if isinstance(e, BitSelect):
            info = self.scope[e.name]
            it, iw, _ = self.expr(e.index, env)
            w = max(info.width, iw)
            base = _zext(env[e.name], info.width, w)
            idx = _zext(it, iw, w)
            return f"((_ extract 0 0) (bvlshr {base} {idx}))", 1, False
        if isinstance(e, PartSelect):
            return (f"((_ extract {e.msb} {e.lsb}) {env[e.name]})",
                    e.msb - e.lsb + 1, False)
        if isinstance(e, Concat):
            parts = [self.expr(p, env) for p in e.parts]
            term = parts[0][0]
            width = parts[0][1]
            for t, w, _ in parts[1:]:
                term = f"(concat {term} {t})"
                width += w
            return term, width, False
        raise UnsupportedConstructError(f"expression {type(e).__name__}", 0, 0)

    def adapt(self, tws, width):
        term, w, s = tws
        if w == width:
            return term
        if w > width:
            return f"((_ extract {width - 1} 0) {term})"
        return _ext(term, w, width, s)


def _exec_stmts(smt, stmts, env, nxt):
    """Symbolic execution; env holds current values (blocking regs mutate),
    nxt holds non-blocking next-state terms."""
    for s in stmts:
        if isinstance(s, (NonBlocking, Blocking)):
            store = nxt if isinstance(s, NonBlocking) else env
            name = lvalue_name(s.target)
            width = smt.scope[name].width
            old = store.get(name, env[name])
            if isinstance(s.target, Ref):
                store[name] = smt.adapt(smt.expr(s.rhs, env), width)
            elif isinstance(s.target, BitSelect):
                bit = smt.adapt(smt.expr(s.rhs, env), 1)
                it, iw, _ = smt.expr(s.target.index, env)
                w = max(width, iw)
                idx = _zext(it, iw, w)
                one = f"(bvshl {_bv(1, w)} {idx})"
                hole = f"((_ extract {width - 1} 0) (bvnot {one}))"
                placed = f"((_ extract {width - 1} 0) (bvshl {_zext(bit, 1, w)} {idx}))"
                merged = f"(bvor (bvand {old} {hole}) {placed})"
                gw = max(iw, 32)
                guard = f"(bvult {_zext(it, iw, gw)} {_bv(width, gw)})"
                store[name] = f"(ite {guard} {merged} {old})"
            else:
                w = s.target.msb - s.target.lsb + 1
                chunk = smt.adapt(smt.expr(s.rhs, env), w)
                hole = ((1 << w) - 1) << s.target.lsb
                keep = (~hole) & ((1 << width) - 1)
                placed = _shift_chunk(chunk, w, s.target.lsb, width)
                store[name] = f"(bvor (bvand {old} {_bv(keep, width)}) {placed})"
        elif isinstance(s, If):
            ct, cw, _ = smt.expr(s.cond, env)
            cond = _nonzero(ct, cw)
            env_t, nxt_t = dict(env), dict(nxt)
            _exec_stmts(smt, s.then_body, env_t, nxt_t)
            env_e, nxt_e = dict(env), dict(nxt)
            _exec_stmts(smt, s.else_body, env_e, nxt_e)
            _merge(cond, env, env_t, env_e)
            _merge(cond, nxt, nxt_t, nxt_e)
        elif isinstance(s, Case):
            st, sw, _ = smt.expr(s.subject, env)
            branches = []
            for arm in s.arms:
                branches.append((f"(= {st} {_bv(arm.label.value, sw)})",
                                 arm.body))
            branches.append((None, s.default))
            envs = []
            for cond, body in branches:
                env_b, nxt_b = dict(env), dict(nxt)
                _exec_stmts(smt, body, env_b, nxt_b)
                envs.append((cond, env_b, nxt_b))
            # fold right: default is the innermost else
            cur_env, cur_nxt = envs[-1][1], envs[-1][2]
            for cond, env_b, nxt_b in reversed(envs[:-1]):
                merged_env = dict(cur_env)
                _merge(cond, merged_env, env_b, cur_env)
                merged_nxt = dict(cur_nxt)
                _merge(cond, merged_nxt, nxt_b, cur_nxt)
                cur_env, cur_nxt = merged_env, merged_nxt
            env.clear()
            env.update(cur_env)
            nxt.clear()
            nxt.update(cur_nxt)


def _shift_chunk(chunk, w, lsb, width):
    """Place a w-bit chunk at offset lsb inside a width-bit word."""
    term = chunk
    if lsb > 0:
        term = f"(concat {term} {_bv(0, lsb)})"
    if w + lsb < width:
        term = f"(concat {_bv(0, width - w - lsb)} {term})"
    return term


def _merge(cond, out, env_t, env_e):
    for key in set(env_t) | set(env_e):
        t = env_t.get(key)
        e = env_e.get(key)
        if t is None:
            out[key] = e
        elif e is None:
            out[key] = t
        elif t == e:
            out[key] = t
        else:
            out[key] = f"(ite {cond} {t} {e})"


def _sym(prefix, name, cycle):
    return f"|{prefix}{name}@{cycle}|"


def _unroll(design, prefix, input_syms, unroll, lines):
    flat = flatten_design(design)
    scope = flat.scope()
    smt = _SmtExpr(scope)
    assigns = _order_assigns(flat.assigns)
    regs = [info.name for info in flat.signals if info.kind == "reg"]
    blocking = set()
    state = {}
    for r in regs:
        state[r] = _bv(scope[r].init, scope[r].width)

    outputs = []
    inputs = [n for n in flat.inputs if n != flat.clock]
    driven = {t for t, _ in assigns} | set(inputs) | set(regs)
    undriven = [info for info in flat.signals
                if info.name not in driven and info.name != flat.clock]
    for k in range(unroll):
        env = dict(state)
        for n in inputs:
            env[n] = input_syms[(n, k)]
        if flat.clock:
            env[flat.clock] = _bv(0, 1)
        for info in undriven:
            env[info.name] = _bv(0, info.width)  # undriven nets read as 0
        for target, rhs in assigns:
            width = scope[target].width
            term = smt.adapt(smt.expr(rhs, env), width)
            sym = _sym(prefix, target, k)
            lines.append(f"(define-fun {sym} () (_ BitVec {width}) {term})")
            env[target] = sym
        nxt = {}
        for ab in flat.always:
            _exec_stmts(smt, ab.body, env, nxt)
        for n in flat.outputs:
            outputs.append((n, k, env[n], scope[n].width))
        new_state = {}
        for r in regs:
            term = nxt.get(r, env[r])
            sym = _sym(prefix, r, k + 1)
            lines.append(f"(define-fun {sym} () (_ BitVec {scope[r].width}) {term})")
            new_state[r] = sym
        state = new_state
    return outputs


def export_smt_miter(seed: Design, variant: Design, unroll: int) -> str:
    """SMT-LIB2 text whose unsatisfiability certifies trace equality of the
    two designs over `unroll` cycles from reset under shared inputs."""
    fa = flatten_design(seed)
    fb = flatten_design(variant)
    ins_a = [(n, fa.scope()[n].width) for n in fa.inputs if n != fa.clock]
    ins_b = [(n, fb.scope()[n].width) for n in fb.inputs if n != fb.clock]
    outs_a = [(n, fa.scope()[n].width) for n in fa.outputs]
    outs_b = [(n, fb.scope()[n].width) for n in fb.outputs]
    if ins_a != ins_b or outs_a != outs_b:
        raise ValueError("designs have different interfaces")

    lines = ["(set-logic QF_BV)"]
    input_syms = {}
    for k in range(unroll):
        for n, w in ins_a:
            sym = f"|in.{n}@{k}|"
            input_syms[(n, k)] = sym
            lines.append(f"(declare-const {sym} (_ BitVec {w}))")

    out_a = _unroll(seed, "a.", input_syms, unroll, lines)
    out_b = _unroll(variant, "b.", input_syms, unroll, lines)

    eqs = [f"(= {ta} {tb})"
           for (na, ka, ta, wa), (nb, kb, tb, wb) in zip(out_a, out_b)]
    if not eqs:
        raise ValueError("designs have no outputs to compare")
    conj = eqs[0] if len(eqs) == 1 else "(and " + " ".join(eqs) + ")"
    lines.append(f"(assert (not {conj}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def export_variant_miter(seed: Design, variant, unroll: int) -> str:
    """Miter for an emi-mutator Variant; profiled guards are rejected
    because dead code is only equivalent under the profiling stimulus."""
    modes = variant.lineage.guard_modes()
    if modes - {"tautological"}:
        raise ProfiledGuardError(
            "variant carries profile-true guards; its equivalence only holds "
            "under the profiling stimulus, so an SMT miter would report "
            "spurious inequivalence. Re-run the mutator in tautological mode.")
    return export_smt_miter(seed, variant.design, unroll)


# --------------------------------------------------------------------------
# Exhaustive bounded checking
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExhaustiveResult:
    equivalent: bool
    total_bits: int
    assignments: int
    counterexample: tuple = None  # stimulus rows that distinguish


def exhaustive_equiv(a: Design, b: Design, unroll: int,
                     max_bits: int = 12) -> ExhaustiveResult:
    """Enumerate every input sequence (<= 2**max_bits) and compare outputs."""
    sa = compile_design(a)
    sb = compile_design(b)
    if sa.inputs != sb.inputs or sa.outputs != sb.outputs:
        raise ValueError("designs have different interfaces")
    widths = [w for _, w in sa.inputs]
    per_cycle = sum(widths)
    total = per_cycle * unroll
    if total > max_bits:
        raise ValueError(f"{total} symbolic input bits exceed the {max_bits} cap")

    for point in range(1 << total):
        rows = []
        acc = point
        for _ in range(unroll):
            row = []
            for w in widths:
                row.append(acc & ((1 << w) - 1))
                acc >>= w
            rows.append(tuple(row))
        out_a, _ = sa.run(rows)
        out_b, _ = sb.run(rows)
        if out_a != out_b:
            return ExhaustiveResult(False, total, 1 << total, tuple(rows))
    return ExhaustiveResult(True, total, 1 << total)


# --------------------------------------------------------------------------
# Optional external solver
# --------------------------------------------------------------------------

def find_solver():
    for name in SOLVERS:
        path = shutil.which(name)
        if path:
            return name, path
    return None


def solve_miter(smt_text: str, timeout: int = 60):
    """Run an SMT solver if one is on PATH; returns 'sat', 'unsat' or None."""
    found = find_solver()
    if not found:
        return None
    name, path = found
    cmd = [path]
    if name == "z3":
        cmd.append("-in")
    try:
        proc = subprocess.run(cmd, input=smt_text.encode(),
                              stdout=subprocess.PIPE,
                              stderr=subprocess.STDOUT, timeout=timeout)
    except (subprocess.TimeoutExpired, OSError):
        return None
    for line in proc.stdout.decode(errors="replace").splitlines():
        line = line.strip()
        if line in ("sat", "unsat"):
            return line
    return None
