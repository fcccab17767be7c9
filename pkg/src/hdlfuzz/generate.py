"""Random seed-design and stimulus generation.

Seeds are built top-down: signals are declared first, then every declared
net and output gets exactly one driver, which makes the single-driver
invariant hold by construction. Combinational assigns only read signals
created before them, so the dependency graph is acyclic by ordering.
Register logic lives in `always @(posedge clk)` blocks shaped as
`if (rst) <constant resets> else <work>`.

The printed line count is tracked exactly while the design grows, so
essentially every attempt lands inside the configured budget; a retry loop
(capped at 10) covers the residual cases before giving up.
"""

import random
from dataclasses import dataclass

from .ast import (
    AlwaysBlock, Binary, BitSelect, Case, CaseArm, Concat, Cond, Const,
    ContinuousAssign, Design, If, Instance, ModuleDef, NetDecl, NonBlocking,
    PartSelect, Port, Ref, RegDecl, Unary, INPUT, OUTPUT, check_design,
)
from .errors import BudgetInfeasibleError
from .printer import design_line_count, item_line_count, stmt_line_count
from .textio import dump_bit_table, parse_bit_table

DEFAULT_OP_WEIGHTS = {
    "&": 4, "|": 4, "^": 4, "+": 4, "-": 3, "*": 1,
    "<<": 1, ">>": 1, ">>>": 1,
    "==": 1, "!=": 1, "<": 1, "<=": 1, ">": 1, ">=": 1,
}


@dataclass(frozen=True)
class GenConfig:
    line_budget: tuple = (700, 1000)
    max_modules: int = 7
    submodules: tuple = (2, 6)
    max_expr_depth: int = 4
    width_choices: tuple = (2, 4, 6, 8, 12, 16)
    op_weights: tuple = tuple(sorted(DEFAULT_OP_WEIGHTS.items()))
    p_sequential: float = 0.45
    p_signed: float = 0.15
    reset_cycles: int = 2
    rng_seed: int = 0

    def weights(self):
        return dict(self.op_weights)

    def check(self):
        lo, hi = self.line_budget
        if lo < 1 or hi < lo:
            raise BudgetInfeasibleError(f"bad line budget {self.line_budget}")
        w = self.weights()
        if any(v < 0 for v in w.values()) or not any(v > 0 for v in w.values()):
            raise BudgetInfeasibleError("operator weights must be nonnegative, one positive")


@dataclass(frozen=True)
class Stimulus:
    signals: tuple  # (name, width) per top-level non-clock input
    rows: tuple     # one value tuple per cycle

    @property
    def cycles(self):
        return len(self.rows)


def dump_stimulus(stim: Stimulus) -> str:
    return dump_bit_table(stim.signals, stim.rows)


def parse_stimulus(text: str) -> Stimulus:
    signals, rows = parse_bit_table(text)
    return Stimulus(signals, rows)


# --------------------------------------------------------------------------
# Expression generation
# --------------------------------------------------------------------------

class _ExprGen:
    def __init__(self, rng, cfg, pool):
        # pool: list of (name, width, signed) readable signals
        self.rng = rng
        self.cfg = cfg
        self.pool = pool
        ws = cfg.weights()
        self.ops = [op for op, w in ws.items() if w > 0]
        self.cum = []
        total = 0
        for op in self.ops:
            total += ws[op]
            self.cum.append(total)

    def pick_op(self):
        r = self.rng.random() * self.cum[-1]
        for op, c in zip(self.ops, self.cum):
            if r < c:
                return op
        return self.ops[-1]

    def ref(self, width):
        """A width-exact read of some pooled signal, adapting as needed."""
        if not self.pool:
            return Const(self.rng.getrandbits(width), width)
        name, w, signed = self.rng.choice(self.pool)
        if w == width:
            return Ref(name)
        if w > width:
            if width == 1 and self.rng.random() < 0.5:
                return BitSelect(name, Const(self.rng.randrange(w), 32))
            return PartSelect(name, width - 1, 0)
        return Concat((Const(0, width - w), Ref(name)))

    def leaf(self, width):
        if self.rng.random() < 0.25:
            return Const(self.rng.getrandbits(width), width)
        return self.ref(width)

    def expr(self, width, depth=None):
        rng = self.rng
        if depth is None:
            depth = self.cfg.max_expr_depth
        if depth <= 0 or rng.random() < 0.2:
            return self.leaf(width)
        op = self.pick_op()
        if op in ("==", "!=", "<", "<=", ">", ">="):
            w = rng.choice(self.cfg.width_choices)
            cmp = Binary(op, self.expr(w, depth - 1), self.expr(w, depth - 1))
            if width == 1:
                return cmp
            return Concat((Const(0, width - 1), cmp))
        if op in ("<<", ">>", ">>>"):
            if rng.random() < 0.7:
                v = rng.randrange(0, max(2, width))
                amount = Const(v, max(1, (max(2, width) - 1).bit_length()))
            else:
                amount = self.ref(2)
            return Binary(op, self.expr(width, depth - 1), amount)
        kind = rng.random()
        if kind < 0.08:
            return Unary(rng.choice(("~", "-")), self.expr(width, depth - 1))
        if kind < 0.14 and width >= 2:
            split = rng.randrange(1, width)
            return Concat((self.expr(split, depth - 1),
                           self.expr(width - split, depth - 1)))
        if kind < 0.22:
            return Cond(self.expr(1, depth - 1),
                        self.expr(width, depth - 1),
                        self.expr(width, depth - 1))
        return Binary(op, self.expr(width, depth - 1), self.expr(width, depth - 1))


# --------------------------------------------------------------------------
# Module construction
# --------------------------------------------------------------------------

class _ModuleBuilder:
    """Accumulates one module; items stay ordered so later combinational
    drivers can only read signals that already exist."""

    def __init__(self, rng, cfg, name, sub_sigs):
        self.rng = rng
        self.cfg = cfg
        self.name = name
        self.sub_sigs = sub_sigs  # module name -> list of (port, dir, width, signed)
        self.ports = [Port("clk", INPUT, 1), Port("rst", INPUT, 1)]
        self.decls = []      # NetDecl/RegDecl items in creation order
        self.comb = []       # ContinuousAssign / Instance items, ordered
        self.always = []     # mutable always blocks: (reset_stmts, work_stmts, regs)
        self.pool = []       # readable (name, width, signed): inputs, regs, settled nets
        self.regs = []
        self.counter = {"in": 0, "out": 0, "w": 0, "r": 0, "u": 0}

    def fresh(self, kind):
        n = self.counter[kind]
        self.counter[kind] += 1
        return f"{kind}{n}"

    def rand_width(self):
        return self.rng.choice(self.cfg.width_choices)

    def add_input(self, width=None, signed=False):
        name = self.fresh("in")
        w = width or self.rand_width()
        self.ports.append(Port(name, INPUT, w, signed))
        self.pool.append((name, w, signed))
        return name

    def add_reg(self, width=None):
        name = self.fresh("r")
        w = width or self.rand_width()
        signed = self.rng.random() < self.cfg.p_signed
        init = self.rng.getrandbits(w)
        self.decls.append(RegDecl(name, w, signed, init))
        self.pool.append((name, w, signed))
        self.regs.append((name, w, signed, init))
        return name, w, signed, init

    def add_net_assign(self, width=None):
        """Fresh net plus its driver; returns (name, width)."""
        name = self.fresh("w")
        w = width or self.rand_width()
        gen = _ExprGen(self.rng, self.cfg, list(self.pool))
        self.decls.append(NetDecl(name, w))
        self.comb.append(ContinuousAssign(Ref(name), gen.expr(w)))
        self.pool.append((name, w, False))
        return name, w

    def matching_signal(self, width):
        cands = [p for p in self.pool if p[1] == width and not p[2]]
        if cands:
            return self.rng.choice(cands)[0]
        name, _ = self.add_net_assign(width)
        return name

    def add_instance(self, sub_name):
        inst = self.fresh("u")
        conns = []
        for pname, direction, width, signed in self.sub_sigs[sub_name]:
            if direction == INPUT:
                if pname == "clk":
                    conns.append((pname, Ref("clk")))
                elif pname == "rst":
                    conns.append((pname, Ref("rst")))
                else:
                    conns.append((pname, Ref(self.matching_signal(width))))
            else:
                out_net = self.fresh("w")
                self.decls.append(NetDecl(out_net, width, signed))
                conns.append((pname, Ref(out_net)))
                self.pool.append((out_net, width, signed))
        self.comb.append(Instance(sub_name, inst, tuple(conns)))

    def new_always(self, n_regs):
        regs = [self.add_reg() for _ in range(n_regs)]
        resets = tuple(NonBlocking(Ref(r), Const(self.rng.getrandbits(w), w))
                       for r, w, _, _ in regs)
        self.always.append({"resets": resets, "work": [], "regs": regs})

    def work_stmt(self, block, nested=True):
        """One statement for the work branch of `block`."""
        rng = self.rng
        regs = block["regs"]
        gen = _ExprGen(rng, self.cfg, list(self.pool))
        r, w, signed, _ = rng.choice(regs)
        roll = rng.random()
        if nested and roll < 0.12:
            then_n = rng.randint(1, 2)
            else_n = rng.randint(0, 2)
            return If(gen.expr(1),
                      tuple(self.work_stmt(block, nested=False)
                            for _ in range(then_n)),
                      tuple(self.work_stmt(block, nested=False)
                            for _ in range(else_n)))
        if nested and roll < 0.18:
            sw = 2
            subject = gen.expr(sw)
            labels = rng.sample(range(1 << sw), rng.randint(1, 2))
            arms = tuple(CaseArm(Const(v, sw),
                                 (self.work_stmt(block, nested=False),))
                         for v in sorted(labels))
            return Case(subject, arms,
                        (self.work_stmt(block, nested=False),))
        return NonBlocking(Ref(r), gen.expr(w))

    def add_output(self, reg_backed):
        name = self.fresh("out")
        w = self.rand_width()
        if reg_backed and self.always:
            self.ports.append(Port(name, OUTPUT, w))
            init = self.rng.getrandbits(w)
            self.decls.append(RegDecl(name, w, False, init))
            block = self.rng.choice(self.always)
            block["regs"].append((name, w, False, init))
            block["resets"] = block["resets"] + (
                NonBlocking(Ref(name), Const(self.rng.getrandbits(w), w)),)
            block["work"].append(NonBlocking(
                Ref(name),
                _ExprGen(self.rng, self.cfg, list(self.pool)).expr(w)))
            self.pool.append((name, w, False))
        else:
            self.ports.append(Port(name, OUTPUT, w))
            # aggregate several pooled signals so most state is observable
            gen = _ExprGen(self.rng, self.cfg, list(self.pool))
            acc = gen.ref(w)
            for _ in range(min(4, max(1, len(self.pool) // 2))):
                acc = Binary(self.rng.choice(("^", "+")), acc, gen.ref(w))
            self.comb.append(ContinuousAssign(Ref(name), acc))

    def build(self) -> ModuleDef:
        items = list(self.decls)
        items.extend(self.comb)
        for block in self.always:
            body = (If(Ref("rst"), block["resets"], tuple(block["work"])),)
            items.append(AlwaysBlock(body, "clk"))
        return ModuleDef(self.name, tuple(self.ports), tuple(items))

    def port_sigs(self):
        return [(p.name, p.direction, p.width, p.signed) for p in self.ports]


def _generate_once(cfg: GenConfig, rng: random.Random) -> Design:
    lo, hi = cfg.line_budget
    n_subs = rng.randint(cfg.submodules[0],
                         max(cfg.submodules[0],
                             min(cfg.submodules[1], cfg.max_modules - 1)))
    names = [f"sub_{i}" for i in range(1, n_subs + 1)] + ["top"]

    sub_sigs = {}
    builders = []
    for idx, name in enumerate(names):
        b = _ModuleBuilder(rng, cfg, name, sub_sigs)
        for _ in range(rng.randint(2, 4)):
            b.add_input()
        for _ in range(rng.randint(1, 2)):
            b.add_net_assign()
        n_always = rng.randint(1, 2)
        for _ in range(n_always):
            b.new_always(rng.randint(1, 3))
        # instantiate earlier modules; the top picks up any still unused
        avail = names[:idx]
        wanted = set(rng.sample(avail, rng.randint(0, min(2, len(avail))))) \
            if avail else set()
        if name == "top":
            used = set()
            for bb in builders:
                for it in bb.comb:
                    if isinstance(it, Instance):
                        used.add(it.module)
            wanted |= set(avail) - used
        for sub in sorted(wanted):
            b.add_instance(sub)
        for i in range(rng.randint(1, 3)):
            b.add_output(reg_backed=(rng.random() < 0.4))
        builders.append(b)
        sub_sigs[name] = b.port_sigs()

    design = Design(tuple(b.build() for b in builders), "top")
    total = design_line_count(design)
    if total > hi:
        raise BudgetInfeasibleError(
            f"skeleton is {total} lines, budget {cfg.line_budget}")
    if total >= lo:
        check_design(design)
        return design

    # grow to a target inside the budget, tracking printed lines exactly
    margin = 16
    target = rng.randint(min(lo, hi - margin), max(lo, hi - margin))
    grow = {b.name: b for b in builders}
    while total < target:
        b = builders[rng.randrange(len(builders))]
        if b.always and rng.random() < cfg.p_sequential:
            block = rng.choice(b.always)
            stmt = b.work_stmt(block)
            delta = stmt_line_count(stmt)
            if total + delta > hi:
                continue
            block["work"].append(stmt)
            total += delta
        else:
            before = len(b.decls) + len(b.comb)
            name, w = b.add_net_assign()
            delta = item_line_count(b.decls[-1]) + item_line_count(b.comb[-1])
            if total + delta > hi:
                # roll back
                b.decls.pop()
                b.comb.pop()
                b.pool.pop()
                continue
            total += delta

    design = Design(tuple(b.build() for b in builders), "top")
    actual = design_line_count(design)
    if not (lo <= actual <= hi):
        raise BudgetInfeasibleError(
            f"generated {actual} lines, budget {cfg.line_budget}")
    check_design(design)
    return design


def generate_seed(cfg: GenConfig) -> Design:
    """Deterministic random design satisfying every structural invariant."""
    cfg.check()
    last_err = None
    for attempt in range(10):
        rng = random.Random((cfg.rng_seed, attempt).__repr__())
        try:
            return _generate_once(cfg, rng)
        except BudgetInfeasibleError as e:
            last_err = e
    raise BudgetInfeasibleError(
        f"no design within {cfg.line_budget} after 10 attempts: {last_err}")


def stimulus_inputs(design: Design) -> tuple:
    """(name, width) of every top-level input a stimulus must drive
    (everything except the clock)."""
    from .ast import flatten_design
    flat = flatten_design(design)
    scope = flat.scope()
    return tuple((n, scope[n].width) for n in flat.inputs if n != flat.clock)


def generate_stimulus(design: Design, cycles: int, rng_seed: int,
                      reset_cycles: int = 2, reset_name: str = "rst") -> Stimulus:
    """Uniform random per-cycle inputs; `rst` held high for the first cycles."""
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    inputs = stimulus_inputs(design)
    rng = random.Random(("stim", rng_seed).__repr__())
    rows = []
    for c in range(cycles):
        row = []
        for name, width in inputs:
            if name == reset_name:
                row.append(1 if c < reset_cycles else 0)
            else:
                row.append(rng.getrandbits(width))
        rows.append(tuple(row))
    return Stimulus(tuple(inputs), tuple(rows))
