"""Semantics-preserving mutation: guard cloning, dead-code injection and
submodule extraction.

Every transformation preserves the simulated trace of the input design under
the profiling stimulus (and, in tautological guard mode, under all stimuli):
statements after an insertion point move into the then-branch of an If whose
condition cannot be false, the untaken else-branch is stuffed with well-typed
dead logic, and optionally the whole guarded If is extracted into a fresh
submodule wired through its live-ins/live-outs.
"""

import random
from dataclasses import dataclass

from .ast import (
    AlwaysBlock, Binary, BitSelect, Blocking, Case, Const, ContinuousAssign,
    Design, If, Instance, ModuleDef, NetDecl, NonBlocking, Port, Ref,
    RegDecl, Unary, INPUT, OUTPUT, KIND_REG, check_design, expr_refs,
    get_stmt_list, iter_stmt_lists, lvalue_name, module_map, module_scope,
    stmt_assigned_names, with_module, with_stmt_list,
)
from .errors import (
    DesignError, NoEligibleVariableError, UnextractableRegionError,
)
from .metrics import structural_metrics
from .depgraph import timing_complexity
from .generate import _ExprGen, GenConfig


@dataclass(frozen=True)
class MutationConfig:
    guard_mode: str = "profiled"  # "profiled" | "tautological"
    dead_budget: tuple = (2, 8)
    p_wrap: float = 0.25
    max_guards: int = 3
    rng_seed: int = 0

    def check(self):
        if self.guard_mode not in ("profiled", "tautological"):
            raise ValueError(f"unknown guard mode {self.guard_mode!r}")
        if not 0.0 <= self.p_wrap <= 1.0:
            raise ValueError("p_wrap must be within [0, 1]")
        if self.dead_budget[0] < 0 or self.dead_budget[1] < self.dead_budget[0]:
            raise ValueError(f"bad dead-code budget {self.dead_budget}")
        if self.max_guards < 1:
            raise ValueError("max_guards must be >= 1")


@dataclass(frozen=True)
class InsertionPoint:
    module: str
    path: tuple   # statement-list path (see ast.get_stmt_list)
    index: int    # 0..len(list), position between statements


@dataclass(frozen=True)
class GuardPredicate:
    expr: object
    mode: str
    module: str
    variable: str
    justification: str


@dataclass(frozen=True)
class MutationRecord:
    kind: str        # "clone" | "inject" | "wrap" | "wrap-skipped" | "no-op"
    module: str = ""
    path: tuple = ()
    index: int = 0
    guard_text: str = ""
    guard_mode: str = ""
    detail: str = ""


@dataclass(frozen=True)
class Lineage:
    seed_id: str
    rng_seed: int
    records: tuple

    def guard_modes(self):
        return {r.guard_mode for r in self.records if r.kind == "clone"}


@dataclass(frozen=True)
class Variant:
    design: Design
    lineage: Lineage
    metrics: object
    timing: int

    def guards(self):
        """(module, guard expr) pairs for re-simulation assertions."""
        from .parser import _Parser
        out = []
        for r in self.lineage.records:
            if r.kind == "clone":
                out.append((r.module, _Parser(r.guard_text).parse_expr()))
        return out


# --------------------------------------------------------------------------
# Insertion points
# --------------------------------------------------------------------------

def _constant_nets(mod: ModuleDef) -> set:
    return {lvalue_name(it.target) for it in mod.items
            if isinstance(it, ContinuousAssign) and isinstance(it.rhs, Const)}


def eligible_guard_vars(mod: ModuleDef) -> list:
    """Names usable as guard variables: multi-bit, driven, not constant."""
    scope = module_scope(mod)
    clocks = {it.clock for it in mod.items if isinstance(it, AlwaysBlock)}
    const_nets = _constant_nets(mod)
    out = []
    for name, info in scope.items():
        if info.width < 2 or name in clocks or name in const_nets:
            continue
        out.append(name)
    return sorted(out)


def enumerate_insertion_points(design: Design) -> list:
    points = []
    for mod in design.modules:
        if not eligible_guard_vars(mod):
            continue
        for path, stmts in iter_stmt_lists(mod):
            for idx in range(len(stmts) + 1):
                points.append(InsertionPoint(mod.name, path, idx))
    return points


# --------------------------------------------------------------------------
# Guard synthesis
# --------------------------------------------------------------------------

def synthesize_guard(profile, point: InsertionPoint, mode: str, rng,
                     design: Design = None) -> GuardPredicate:
    if mode == "tautological":
        if design is None:
            raise ValueError("tautological mode needs the design for scoping")
        mod = module_map(design)[point.module]
        cands = eligible_guard_vars(mod)
        if not cands:
            raise NoEligibleVariableError(
                f"no eligible guard variable in {point.module}")
        scope = module_scope(mod)
        name = rng.choice(cands)
        width = scope[name].width
        schema = rng.randrange(3)
        if schema == 0:
            expr = Binary("==", Binary("&", Ref(name), Const(0, width)),
                          Const(0, width))
            why = "x & 0 == 0"
        elif schema == 1:
            expr = Binary("==", Ref(name), Ref(name))
            why = "x == x"
        else:
            expr = Binary("==", Unary("&", Binary("|", Ref(name),
                                                  Unary("~", Ref(name)))),
                          Const(1, 1))
            why = "&(x | ~x) == 1"
        return GuardPredicate(expr, mode, point.module, name, why)

    if mode != "profiled":
        raise ValueError(f"unknown guard mode {mode!r}")
    facts = profile.for_module(point.module)
    cands = sorted(v for v, f in facts.items() if f.width >= 2)
    if not cands:
        raise NoEligibleVariableError(
            f"no profiled guard variable in {point.module}")
    name = rng.choice(cands)
    f = facts[name]
    width = f.width
    forms = []
    if f.min_u == f.max_u:
        forms.append("equal")
    else:
        if not f.signed:
            forms.append("range")
        if f.const_mask:
            forms.append("mask")
    if not forms:
        forms.append("mask0")
    form = rng.choice(forms)
    if form == "equal":
        expr = Binary("==", Ref(name), Const(f.min_u, width))
        why = f"constant {f.min_u} under profile"
    elif form == "range":
        expr = Binary("&&",
                      Binary(">=", Ref(name), Const(f.min_u, width)),
                      Binary("<=", Ref(name), Const(f.max_u, width)))
        why = f"observed range [{f.min_u}, {f.max_u}]"
    elif form == "mask":
        expr = Binary("==", Binary("&", Ref(name), Const(f.const_mask, width)),
                      Const(f.const_val, width))
        why = f"constant bits mask {f.const_mask:#x}"
    else:
        # signed full-range fallback: every value satisfies x & 0 == 0
        expr = Binary("==", Binary("&", Ref(name), Const(0, width)),
                      Const(0, width))
        why = "no invariant narrower than x & 0 == 0"
    return GuardPredicate(expr, mode, point.module, name, why)


# --------------------------------------------------------------------------
# Path cloning and dead-code injection
# --------------------------------------------------------------------------

def clone_path_with_guard(design: Design, point: InsertionPoint,
                          guard: GuardPredicate) -> Design:
    mod = module_map(design)[point.module]
    stmts = get_stmt_list(mod, point.path)
    suffix = stmts[point.index:]
    new_list = stmts[:point.index] + (If(guard.expr, suffix, ()),)
    return with_module(design, with_stmt_list(mod, point.path, new_list))


def _fresh_names(mod: ModuleDef, prefix: str, count: int) -> list:
    taken = {p.name for p in mod.ports}
    for it in mod.items:
        name = getattr(it, "name", None)
        if name:
            taken.add(name)
    out = []
    i = 0
    while len(out) < count:
        cand = f"{prefix}{i}"
        if cand not in taken:
            out.append(cand)
            taken.add(cand)
        i += 1
    return out


def inject_dead_code(design: Design, handle, budget: int, rng) -> Design:
    """Populate the else-branch of the guard If at `handle` with dead logic.

    handle: (module name, stmt-list path, index of the guard If).
    Injected statements may read anything in scope but write only registers
    already assigned in the enclosing always block or fresh dead regs; fresh
    dead nets are driven by new module-level assigns and read only here.
    """
    if budget <= 0:
        return design
    module_name, path, if_index = handle
    mod = module_map(design)[module_name]
    scope = module_scope(mod)
    stmts = get_stmt_list(mod, path)
    guard_if = stmts[if_index]
    if not isinstance(guard_if, If):
        raise DesignError("handle does not address an If statement")

    always_idx = path[0][1]
    block = mod.items[always_idx]
    block_regs = sorted(stmt_assigned_names(block.body))

    n_regs = min(budget, rng.randint(1, 3))
    n_nets = rng.randint(0, 2)
    reg_names = _fresh_names(mod, "dz", n_regs)
    net_names = _fresh_names(mod, "dw", n_nets)

    widths = GenConfig().width_choices
    read_pool = [(name, info.width, info.signed)
                 for name, info in sorted(scope.items())
                 if info.width >= 1 and name != block.clock]

    new_items = []
    dead_pool = []
    for name in reg_names:
        w = rng.choice(widths)
        new_items.append(RegDecl(name, w, False, rng.getrandbits(w)))
        dead_pool.append((name, w, False))
    gen_cfg = GenConfig()
    for name in net_names:
        w = rng.choice(widths)
        gen = _ExprGen(rng, gen_cfg, read_pool + dead_pool)
        new_items.append(NetDecl(name, w))
        new_items.append(ContinuousAssign(Ref(name), gen.expr(w)))
        dead_pool.append((name, w, False))

    # statements: non-blocking writes to dead regs, sometimes to live regs
    writable_dead = [(n, w) for n, w, _ in dead_pool[:n_regs]]
    body = []
    gen = _ExprGen(rng, gen_cfg, read_pool + dead_pool)

    def dead_stmt(depth):
        roll = rng.random()
        if depth > 0 and roll < 0.15:
            return If(gen.expr(1),
                      tuple(dead_stmt(depth - 1)
                            for _ in range(rng.randint(1, 2))),
                      tuple(dead_stmt(depth - 1)
                            for _ in range(rng.randint(0, 1))))
        if block_regs and roll < 0.35:
            name = rng.choice(block_regs)
            return NonBlocking(Ref(name), gen.expr(scope[name].width))
        name, w = rng.choice(writable_dead)
        return NonBlocking(Ref(name), gen.expr(w))

    for _ in range(budget):
        body.append(dead_stmt(1))

    new_if = If(guard_if.cond, guard_if.then_body,
                guard_if.else_body + tuple(body))
    new_list = stmts[:if_index] + (new_if,) + stmts[if_index + 1:]
    new_mod = with_stmt_list(mod, path, new_list)

    # dead declarations append at the end so existing statement paths
    # (always-block item indices) stay valid for the caller
    items = new_mod.items + tuple(new_items)
    return with_module(design, ModuleDef(new_mod.name, new_mod.ports, items))


# --------------------------------------------------------------------------
# Subsystem wrapping
# --------------------------------------------------------------------------

def _ordered_reads(stmts) -> list:
    """Identifiers read under `stmts`, in first-use order."""
    out = []
    seen = set()

    def expr_walk(e):
        for name in sorted(expr_refs(e)):
            # expr_refs is a set; sort for determinism inside one expression
            if name not in seen:
                seen.add(name)
                out.append(name)

    def walk(ss):
        for s in ss:
            if isinstance(s, (NonBlocking, Blocking)):
                expr_walk(s.rhs)
                if isinstance(s.target, BitSelect):
                    expr_walk(s.target.index)
            elif isinstance(s, If):
                expr_walk(s.cond)
                walk(s.then_body)
                walk(s.else_body)
            elif isinstance(s, Case):
                expr_walk(s.subject)
                for arm in s.arms:
                    walk(arm.body)
                walk(s.default)

    walk(stmts)
    return out


def _contains_blocking(stmts) -> bool:
    for s in stmts:
        if isinstance(s, Blocking):
            return True
        if isinstance(s, If):
            if _contains_blocking(s.then_body) or _contains_blocking(s.else_body):
                return True
        if isinstance(s, Case):
            if any(_contains_blocking(a.body) for a in s.arms):
                return True
            if _contains_blocking(s.default):
                return True
    return False


def wrap_subsystem(design: Design, handle) -> Design:
    """Extract the guard If at `handle` into a new instantiated submodule.

    The chain of enclosing If conditions is replicated inside the submodule
    and the (constant) reset assignments of the moved registers are ported
    along, so per-register write sequences are preserved exactly.
    """
    module_name, path, if_index = handle
    mod = module_map(design)[module_name]
    scope = module_scope(mod)
    stmts = get_stmt_list(mod, path)
    region = stmts[if_index]
    if not isinstance(region, If):
        raise DesignError("handle does not address an If statement")
    if _contains_blocking((region,)):
        raise UnextractableRegionError("region contains blocking assignments")
    for step in path[1:]:
        if step[0] in ("arm", "default"):
            raise UnextractableRegionError("region nested inside a case")

    always_idx = path[0][1]
    block = mod.items[always_idx]
    clock = block.clock

    live_outs = sorted(stmt_assigned_names((region,)))
    for name in live_outs:
        info = scope[name]
        if info.kind != KIND_REG:
            raise UnextractableRegionError(f"{name} is not a register")

    # the chain of enclosing Ifs, outermost first; opposite-branch lists are
    # the only legal homes for outside writes to the moved registers
    chain = []      # (cond expr, region side)
    opposite = {}   # opposite-branch list path -> chain position
    cur = mod.items[always_idx].body
    for j, step in enumerate(path[1:], start=1):
        kind, idx = step[0], step[1]
        anc = cur[idx]
        chain.append((anc.cond, kind))
        flip = "else" if kind == "then" else "then"
        opposite[path[:j] + ((flip, idx),)] = j
        cur = anc.then_body if kind == "then" else anc.else_body

    portable = {}  # chain position -> list of (stmt index, stmt)
    live_out_set = set(live_outs)
    for lpath, lstmts in iter_stmt_lists(mod):
        for si, s in enumerate(lstmts):
            if not isinstance(s, (NonBlocking, Blocking)):
                continue
            if lvalue_name(s.target) not in live_out_set:
                continue
            if _under_region(lpath, path, if_index):
                continue
            if lpath[0][1] != always_idx:
                raise UnextractableRegionError(
                    f"{lvalue_name(s.target)} written outside the host block")
            if (not isinstance(s, NonBlocking)
                    or not isinstance(s.target, Ref)
                    or not isinstance(s.rhs, Const)):
                raise UnextractableRegionError(
                    f"non-constant outside write to {lvalue_name(s.target)}")
            if lpath not in opposite:
                raise UnextractableRegionError(
                    f"outside write to {lvalue_name(s.target)} is off the chain")
            portable.setdefault(opposite[lpath], []).append((si, s))

    # live-ins: reads of the region plus reads of chain conditions
    reads = _ordered_reads((region,))
    for cond, _ in chain:
        for name in _ordered_reads((If(cond, (), ()),)):
            if name not in reads:
                reads.append(name)
    live_ins = [r for r in reads if r not in live_out_set and r != clock]

    # build the new submodule
    existing = {m.name for m in design.modules}
    n = 0
    while f"sub_w{n}" in existing:
        n += 1
    sub_name = f"sub_w{n}"
    inst_names = _fresh_names(mod, "uw", 1)
    inst_name = inst_names[0]

    sub_ports = [Port(clock, INPUT, 1)]
    for name in live_ins:
        info = scope[name]
        sub_ports.append(Port(name, INPUT, info.width, info.signed))
    for name in live_outs:
        info = scope[name]
        sub_ports.append(Port(name, OUTPUT, info.width, info.signed))

    sub_items = [RegDecl(name, scope[name].width, scope[name].signed,
                         scope[name].init)
                 for name in live_outs]

    # reconstruct the chain inside the submodule, innermost-first
    inner = (region,)
    for j in range(len(chain), 0, -1):
        cond, side = chain[j - 1]
        ported = tuple(s for _, s in sorted(portable.get(j, [])))
        if side == "then":
            inner = (If(cond, inner, ported),)
        else:
            inner = (If(cond, ported, inner),)
    sub_items.append(AlwaysBlock(inner, clock))
    sub_mod = ModuleDef(sub_name, tuple(sub_ports), tuple(sub_items))

    # rewrite the parent: drop the region, drop ported resets, swap decls
    new_mod = with_stmt_list(mod, path, stmts[:if_index] + stmts[if_index + 1:])
    inverse = {j: p for p, j in opposite.items()}
    for j, entries in sorted(portable.items()):
        prefix = inverse[j]
        lst = get_stmt_list(new_mod, prefix)
        drop = {si for si, _ in entries}
        new_mod = with_stmt_list(new_mod, prefix,
                                 tuple(s for i, s in enumerate(lst)
                                       if i not in drop))

    out_port_names = {p.name for p in mod.ports if p.direction == OUTPUT}
    items = []
    for it in new_mod.items:
        if isinstance(it, RegDecl) and it.name in live_out_set:
            if it.name not in out_port_names:
                items.append(NetDecl(it.name, it.width, it.signed))
            continue
        items.append(it)

    conns = [(clock, Ref(clock))]
    conns += [(name, Ref(name)) for name in live_ins]
    conns += [(name, Ref(name)) for name in live_outs]
    items.append(Instance(sub_name, inst_name, tuple(conns)))
    new_mod = ModuleDef(new_mod.name, new_mod.ports, tuple(items))

    modules = []
    for m in design.modules:
        if m.name == module_name:
            modules.append(sub_mod)
            modules.append(new_mod)
        else:
            modules.append(m)
    result = Design(tuple(modules), design.top)
    check_design(result)
    return result


def _under_region(lpath, region_path, region_index):
    """Is the statement list `lpath` inside the region If?"""
    if len(lpath) <= len(region_path):
        return False
    if lpath[:len(region_path)] != region_path:
        return False
    step = lpath[len(region_path)]
    return step[1] == region_index


# --------------------------------------------------------------------------
# Mutation pipeline
# --------------------------------------------------------------------------

_WRAP_RETRIES = 8


def mutate(design: Design, profile, cfg: MutationConfig,
           seed_id: str = "seed") -> Variant:
    """Apply 1..max_guards clone/inject/(wrap) rounds; fully deterministic.

    A round that intends to wrap retries a few insertion points until one
    yields an extractable region; if none does, the last clone+inject is
    kept and the wrap is recorded as skipped.
    """
    cfg.check()
    from .printer import print_expr
    rng = random.Random(("mutate", cfg.rng_seed).__repr__())
    current = design
    records = []
    n_guards = rng.randint(1, cfg.max_guards)
    for _ in range(n_guards):
        want_wrap = rng.random() < cfg.p_wrap
        attempts = _WRAP_RETRIES if want_wrap else 1
        round_result = None   # (design, records for this round)
        fallback = None
        for _attempt in range(attempts):
            points = enumerate_insertion_points(current)
            if cfg.guard_mode == "profiled":
                with_facts = {m for (m, v), f in profile.facts.items()
                              if f.width >= 2}
                points = [p for p in points if p.module in with_facts]
            if want_wrap:
                # suffix-maximal positions under pure If ancestry extract
                # almost always; prefer them when this round wants a wrap
                friendly = [p for p in points if p.index == 0
                            and all(s[0] in ("always", "then", "else")
                                    for s in p.path)]
                if friendly:
                    points = friendly
            if not points:
                break
            point = rng.choice(points)
            guard = synthesize_guard(profile, point, cfg.guard_mode, rng,
                                     design=current)
            tentative = clone_path_with_guard(current, point, guard)
            round_records = [MutationRecord(
                "clone", point.module, point.path, point.index,
                print_expr(guard.expr), guard.mode, guard.justification)]
            handle = (point.module, point.path, point.index)
            budget = rng.randint(*cfg.dead_budget)
            if budget:
                tentative = inject_dead_code(tentative, handle, budget, rng)
                round_records.append(MutationRecord(
                    "inject", point.module, point.path, point.index,
                    detail=f"budget={budget}"))
            if not want_wrap:
                round_result = (tentative, round_records)
                break
            try:
                wrapped = wrap_subsystem(tentative, handle)
                round_records.append(MutationRecord(
                    "wrap", point.module, point.path, point.index))
                round_result = (wrapped, round_records)
                break
            except UnextractableRegionError as e:
                fallback = (tentative, round_records + [MutationRecord(
                    "wrap-skipped", point.module, point.path, point.index,
                    detail=str(e))])
        if round_result is None:
            round_result = fallback
        if round_result is None:
            records.append(MutationRecord("no-op", detail="no insertion points"))
            break
        current, round_records = round_result
        records.extend(round_records)
    check_design(current)
    lineage = Lineage(seed_id, cfg.rng_seed, tuple(records))
    return Variant(current, lineage, structural_metrics(current),
                   timing_complexity(current))
