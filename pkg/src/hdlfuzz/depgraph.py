"""Combinational dependency graph, loop detection and unit-delay timing.

The graph is built over the flattened design. Signal nodes carry no delay;
operator nodes cost one unit each except pure wiring (constant bit-selects,
part-selects, concatenation). Register updates end at a `regD:` sink node,
so register outputs never have incoming combinational edges and sequential
feedback is not a loop.
"""

from dataclasses import dataclass

from .ast import (
    Binary, BitSelect, Blocking, Case, Concat, Cond, Const, Design,
    FlatDesign, If, NonBlocking, PartSelect, Ref, Unary, flatten_design,
    lvalue_name,
)
from .errors import CombLoopError


@dataclass
class CombDAG:
    nodes: list                 # node ids (signals, "c#k", "op#k:SYM", "regD:<r>")
    edges: list                 # (src, dst) pairs
    delays: dict                # node id -> unit delay
    reg_outputs: set            # register output signal nodes (path sources)
    reg_sinks: set              # "regD:" nodes (path sinks)

    def successors(self):
        succ = {n: [] for n in self.nodes}
        for u, v in self.edges:
            succ[u].append(v)
        return succ


def build_comb_dag(design: Design) -> CombDAG:
    flat = flatten_design(design)
    return _build_from_flat(flat)


def _build_from_flat(flat: FlatDesign) -> CombDAG:
    g = CombDAG(nodes=[], edges=[], delays={}, reg_outputs=set(), reg_sinks=set())
    seen = set()

    def add_node(nid, delay=0):
        if nid not in seen:
            seen.add(nid)
            g.nodes.append(nid)
            g.delays[nid] = delay
        return nid

    for info in flat.signals:
        add_node(info.name)
        if info.kind == "reg":
            g.reg_outputs.add(info.name)

    counter = [0]

    def fresh(tag, delay):
        counter[0] += 1
        return add_node(f"{tag}#{counter[0]}", delay)

    def expr_node(e):
        """Add nodes/edges for `e`, returning the node feeding its value."""
        if isinstance(e, Const):
            return fresh("c", 0)
        if isinstance(e, Ref):
            return add_node(e.name)
        if isinstance(e, Unary):
            n = fresh(f"op:{e.op}", 1)
            g.edges.append((expr_node(e.operand), n))
            return n
        if isinstance(e, Binary):
            n = fresh(f"op:{e.op}", 1)
            g.edges.append((expr_node(e.left), n))
            g.edges.append((expr_node(e.right), n))
            return n
        if isinstance(e, Cond):
            n = fresh("op:mux", 1)
            for part in (e.cond, e.if_true, e.if_false):
                g.edges.append((expr_node(part), n))
            return n
        if isinstance(e, BitSelect):
            dyn = not isinstance(e.index, Const)
            n = fresh("op:bitsel" if dyn else "wire:bitsel", 1 if dyn else 0)
            g.edges.append((add_node(e.name), n))
            if dyn:
                g.edges.append((expr_node(e.index), n))
            return n
        if isinstance(e, PartSelect):
            n = fresh("wire:partsel", 0)
            g.edges.append((add_node(e.name), n))
            return n
        if isinstance(e, Concat):
            n = fresh("wire:concat", 0)
            for p in e.parts:
                g.edges.append((expr_node(p), n))
            return n
        raise TypeError(f"not an expression: {e!r}")

    for target, rhs in flat.assigns:
        root = expr_node(rhs)
        g.edges.append((root, add_node(target)))

    def sink_for(reg):
        nid = f"regD:{reg}"
        if nid not in seen:
            add_node(nid)
            g.reg_sinks.add(nid)
        return nid

    def walk(stmts, cond_nodes):
        for s in stmts:
            if isinstance(s, (NonBlocking, Blocking)):
                value = expr_node(s.rhs)
                if isinstance(s.target, BitSelect) and not isinstance(s.target.index, Const):
                    idx = expr_node(s.target.index)
                    n = fresh("op:bitwr", 1)
                    g.edges.append((value, n))
                    g.edges.append((idx, n))
                    value = n
                # one mux per enclosing condition level
                for cn in reversed(cond_nodes):
                    n = fresh("op:mux", 1)
                    g.edges.append((value, n))
                    g.edges.append((cn, n))
                    value = n
                g.edges.append((value, sink_for(lvalue_name(s.target))))
            elif isinstance(s, If):
                cn = expr_node(s.cond)
                walk(s.then_body, cond_nodes + [cn])
                walk(s.else_body, cond_nodes + [cn])
            elif isinstance(s, Case):
                cn = expr_node(s.subject)
                for arm in s.arms:
                    walk(arm.body, cond_nodes + [cn])
                walk(s.default, cond_nodes + [cn])

    for ab in flat.always:
        walk(ab.body, [])

    return g


def detect_comb_loops(g: CombDAG) -> list:
    """Strongly connected components with a cycle, one reported cycle each.

    Each cycle is returned as the ordered list of signal names on it
    (operator nodes elided). Empty result iff the graph is acyclic.
    """
    index = {}
    low = {}
    on_stack = set()
    stack = []
    sccs = []
    counter = [0]

    succ = g.successors()

    for start in g.nodes:
        if start in index:
            continue
        work = [(start, iter(succ[start]))]
        index[start] = low[start] = counter[0]
        counter[0] += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(succ[nxt])))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    n = stack.pop()
                    on_stack.discard(n)
                    comp.append(n)
                    if n == node:
                        break
                if len(comp) > 1:
                    sccs.append(comp)
                elif comp[0] in succ[comp[0]]:
                    sccs.append(comp)  # direct self loop, e.g. assign a = a;

    cycles = []
    for comp in sccs:
        comp_set = set(comp)
        # trace one cycle inside the component by following successors
        node = comp[0]
        path = [node]
        pos = {node: 0}
        while True:
            nxt = next(n for n in succ[node] if n in comp_set)
            if nxt in pos:
                cyc = path[pos[nxt]:]
                break
            pos[nxt] = len(path)
            path.append(nxt)
            node = nxt
        signals = [n for n in cyc if not ("#" in n or n.startswith("regD:"))]
        cycles.append(signals if signals else cyc)
    return cycles


def timing_complexity(design: Design) -> int:
    """Length of the longest combinational path under the unit-delay model."""
    g = build_comb_dag(design)
    loops = detect_comb_loops(g)
    if loops:
        raise CombLoopError(f"combinational loops present: {loops[0]}")

    indeg = {n: 0 for n in g.nodes}
    succ = g.successors()
    for u, v in g.edges:
        indeg[v] += 1
    ready = [n for n in g.nodes if indeg[n] == 0]
    dist = {n: g.delays[n] for n in g.nodes}
    order = []
    while ready:
        n = ready.pop()
        order.append(n)
        for v in succ[n]:
            if dist[n] + g.delays[v] > dist[v]:
                dist[v] = dist[n] + g.delays[v]
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    if len(order) != len(g.nodes):
        raise CombLoopError("combinational loops present")
    return max(dist.values(), default=0)
