"""Mock buggy synthesizer: deterministic fault injection for end-to-end
validation of the campaign, triage and replay machinery.

Fault classes:
  A: swaps the then/else branches of every If nested three or more deep,
     so a dead branch becomes live (and the live path dead).
  B: constant-folds one non-constant instance input binding, chosen by the
     seeded rng over all candidate bindings.
  C: aborts with a synthetic crash (fake backtrace full of scratch paths,
     addresses and line numbers) when the design references more modules
     than the threshold allows.
A and B return valid designs; C raises SimulatedCrash.
"""

import random

from .ast import (
    AlwaysBlock, Case, CaseArm, Const, Design, If, Instance, ModuleDef,
    check_design, module_map,
)
from .errors import SimulatedCrash
from .metrics import structural_metrics

FAULT_CLASSES = ("A", "B", "C")
DEFAULT_REFS_THRESHOLD = 12


def _swap_deep_ifs(stmts, depth):
    out = []
    for s in stmts:
        if isinstance(s, If):
            then_b = _swap_deep_ifs(s.then_body, depth + 1)
            else_b = _swap_deep_ifs(s.else_body, depth + 1)
            if depth >= 3:
                out.append(If(s.cond, else_b, then_b))
            else:
                out.append(If(s.cond, then_b, else_b))
        elif isinstance(s, Case):
            arms = tuple(CaseArm(a.label, _swap_deep_ifs(a.body, depth + 1))
                         for a in s.arms)
            out.append(Case(s.subject, arms,
                            _swap_deep_ifs(s.default, depth + 1)))
        else:
            out.append(s)
    return tuple(out)


def _fault_a(design):
    modules = []
    for m in design.modules:
        items = []
        for it in m.items:
            if isinstance(it, AlwaysBlock):
                items.append(AlwaysBlock(_swap_deep_ifs(it.body, 1), it.clock))
            else:
                items.append(it)
        modules.append(ModuleDef(m.name, m.ports, tuple(items)))
    return Design(tuple(modules), design.top)


def _fault_b(design, rng):
    mods = module_map(design)
    candidates = []  # (module index, item index, conn index, width)
    for mi, m in enumerate(design.modules):
        for ii, it in enumerate(m.items):
            if not isinstance(it, Instance):
                continue
            formals = {p.name: p for p in mods[it.module].ports}
            for ci, (pname, actual) in enumerate(it.conns):
                fp = formals[pname]
                if fp.direction == "input" and not isinstance(actual, Const) \
                        and pname not in ("clk",):
                    candidates.append((mi, ii, ci, fp.width))
    if not candidates:
        return design
    mi, ii, ci, width = candidates[rng.randrange(len(candidates))]
    m = design.modules[mi]
    inst = m.items[ii]
    conns = list(inst.conns)
    conns[ci] = (conns[ci][0], Const(0, width))
    items = m.items[:ii] + (Instance(inst.module, inst.name, tuple(conns)),) \
        + m.items[ii + 1:]
    modules = design.modules[:mi] + (ModuleDef(m.name, m.ports, items),) \
        + design.modules[mi + 1:]
    return Design(modules, design.top)


def _fault_c(design, rng, threshold):
    refs = structural_metrics(design).refs
    if refs <= threshold:
        return design
    scratch = f"/tmp/scratch-{rng.getrandbits(32):08x}"
    addr1 = rng.getrandbits(48)
    addr2 = rng.getrandbits(48)
    line1 = rng.randrange(100, 9999)
    line2 = rng.randrange(100, 9999)
    backtrace = (
        "FATAL: elaborate: module reference budget exhausted\n"
        f"  at {scratch}/elab/netgraph.cc:{line1} (0x{addr1:012x})\n"
        "  ConstraintGuard::check(NetGraph&)\n"
        f"  ElabPass::run() at /opt/tools/mock/lib/libelab.so+0x{addr2:012x}\n"
        f"  main {scratch}/driver/main.cc:{line2}\n"
    )
    raise SimulatedCrash(
        "synthesis aborted: module reference limit exceeded "
        "(ConstraintGuard::check)", backtrace)


def mock_buggy_synthesizer(design: Design, fault_class: str, rng_seed: int,
                           refs_threshold: int = DEFAULT_REFS_THRESHOLD) -> Design:
    """Deterministic faulty 'compilation' of `design`.

    Classes A and B return a valid Design (possibly identical when the
    fault's structural precondition is not met); class C raises
    SimulatedCrash above the reference threshold.
    """
    rng = random.Random(("mock", fault_class, rng_seed).__repr__())
    if fault_class == "A":
        result = _fault_a(design)
    elif fault_class == "B":
        result = _fault_b(design, rng)
    elif fault_class == "C":
        result = _fault_c(design, rng, refs_threshold)
    else:
        raise ValueError(f"unknown fault class {fault_class!r}")
    check_design(result)
    return result
