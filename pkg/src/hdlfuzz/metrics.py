"""Structural complexity metrics.

v counts net+reg declarations, c counts continuous assigns plus instance
port bindings, s counts always blocks, refs counts instance statements in
modules reachable from the top, lines is the printed line count. All five
are pure functions of the AST.
"""

from dataclasses import dataclass

from .ast import (
    AlwaysBlock, ContinuousAssign, Design, Instance, NetDecl, RegDecl,
    module_map, reachable_modules,
)
from .printer import design_line_count


@dataclass(frozen=True)
class Metrics:
    v: int
    c: int
    s: int
    refs: int
    lines: int


def structural_metrics(design: Design) -> Metrics:
    v = c = s = 0
    for m in design.modules:
        for it in m.items:
            if isinstance(it, (NetDecl, RegDecl)):
                v += 1
            elif isinstance(it, ContinuousAssign):
                c += 1
            elif isinstance(it, Instance):
                c += len(it.conns)
            elif isinstance(it, AlwaysBlock):
                s += 1
    refs = 0
    mods = module_map(design)
    for name in reachable_modules(design):
        for it in mods[name].items:
            if isinstance(it, Instance):
                refs += 1
    return Metrics(v, c, s, refs, design_line_count(design))
