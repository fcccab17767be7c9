"""Differential oracles: internal, cross-tool, and external-tool adapters.

The internal oracle compares simulated traces of two designs bit by bit.
External tools run through ToolAdapter command templates inside private
scratch directories; their output is normalized to the canonical trace
format and compared pairwise, so `Equivalent` means every pair of tools
agreed on every bit of every output in every cycle.
"""

import os
import shlex
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path

from .ast import Design, OUTPUT
from .errors import AdapterConfigError
from .printer import print_design
from .simulate import (
    EQUIVALENT, MISMATCH, MISMATCHED_INTERFACE, Trace, compare_traces,
    parse_trace, simulate, compile_design,
)
from .textio import BitTableError

TOOL_PATH_ENV = "HDLFUZZ_TOOL_PREFIX"

# verdict kinds
CRASH = "crash"
TIMEOUT = "timeout"
ADAPTER_ERROR = "adapter-error"


@dataclass(frozen=True)
class OracleVerdict:
    kind: str                 # equivalent | mismatch | crash | timeout | adapter-error
    tool: str = ""            # tool name, or "a|b" pair for mismatches
    cycle: int = None
    signal: str = None
    expected: int = None
    actual: int = None
    exit_code: int = None
    output_excerpt: str = ""
    detail: str = ""

    @property
    def is_equivalent(self):
        return self.kind == EQUIVALENT

    def summary(self):
        if self.kind == EQUIVALENT:
            return "EQUIVALENT"
        if self.kind == MISMATCH:
            return (f"MISMATCH signal={self.signal} cycle={self.cycle} "
                    f"expected={self.expected} actual={self.actual} "
                    f"tools={self.tool}")
        if self.kind == CRASH:
            return f"CRASH tool={self.tool} exit={self.exit_code}"
        if self.kind == TIMEOUT:
            return f"TIMEOUT tool={self.tool}"
        return f"ADAPTER-ERROR tool={self.tool} {self.detail}"


def _from_trace_verdict(tv, tool=""):
    if tv.kind == EQUIVALENT:
        return OracleVerdict(EQUIVALENT, tool=tool)
    if tv.kind == MISMATCHED_INTERFACE:
        return OracleVerdict(ADAPTER_ERROR, tool=tool,
                             detail=f"interfaces differ: {tv.detail}")
    return OracleVerdict(MISMATCH, tool=tool, cycle=tv.cycle, signal=tv.signal,
                         expected=tv.expected, actual=tv.actual,
                         detail=tv.detail)


def internal_differential(seed: Design, variant: Design, stim) -> OracleVerdict:
    from .errors import WidthMismatchError
    try:
        ta = simulate(seed, stim)
        tb = simulate(variant, stim)
    except WidthMismatchError as e:
        return OracleVerdict(ADAPTER_ERROR, tool="internal",
                             detail=f"interface mismatch: {e}")
    return _from_trace_verdict(compare_traces(ta, tb), tool="internal|internal")


# --------------------------------------------------------------------------
# Testbench emission (drives the canonical stimulus, prints the canonical
# trace on stdout; consumed by external simulator adapters)
# --------------------------------------------------------------------------

def make_testbench(design: Design, stim, name: str = "tb") -> str:
    sim = compile_design(design)
    top = next(m for m in design.modules if m.name == design.top)
    clock = sim.flat.clock
    lines = [f"module {name};"]
    for p in top.ports:
        spec = "signed " if p.signed else ""
        rng = f"[{p.width - 1}:0] " if p.width > 1 else ""
        if p.direction == OUTPUT:
            lines.append(f"  wire {spec}{rng}{p.name};")
        else:
            lines.append(f"  reg {spec}{rng}{p.name};")
    conns = ", ".join(f".{p.name}({p.name})" for p in top.ports)
    lines.append(f"  {top.name} dut({conns});")
    lines.append("  initial begin")
    for n, w in sim.outputs:
        lines.append(f'    $write("{n} {w}\\n");')
    lines.append('    $write("\\n");')
    if clock:
        lines.append(f"    {clock} = 1'b0;")
    fmt = "".join("%b" for _ in sim.outputs)
    args = ", ".join(n for n, _ in sim.outputs)
    for row in stim.rows:
        for (n, w), v in zip(sim.inputs, row):
            lines.append(f"    {n} = {w}'d{v};")
        lines.append("    #4;")
        lines.append(f'    $write("{fmt}\\n", {args});')
        if clock:
            lines.append(f"    #1; {clock} = 1'b1; #5; {clock} = 1'b0;")
        else:
            lines.append("    #6;")
    lines.append("    $finish;")
    lines.append("  end")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# External tool adapters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ToolAdapter:
    name: str
    command: str            # template: {input} {testbench} {top} {workdir} {trace_out}
    timeout: float = 60.0
    expect_exit: int = 0
    normalizer: str = ""    # optional template: {raw} {trace_out} {workdir}

    def check(self):
        if "{input}" not in self.command:
            raise AdapterConfigError(
                f"adapter {self.name!r}: command lacks {{input}}")
        if self.timeout <= 0:
            raise AdapterConfigError(f"adapter {self.name!r}: timeout <= 0")


@dataclass(frozen=True)
class ToolResult:
    kind: str               # "trace" | crash | timeout | adapter-error
    trace: Trace = None
    exit_code: int = None
    output_excerpt: str = ""
    detail: str = ""


def _excerpt(data: bytes, limit: int = 2000) -> str:
    return data.decode(errors="replace")[:limit]


def run_external_tool(adapter: ToolAdapter, design: Design, stim,
                      workdir) -> ToolResult:
    adapter.check()
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    input_v = workdir / "design.v"
    tb_v = workdir / "tb.v"
    trace_out = workdir / "trace.txt"
    raw_out = workdir / "raw.out"
    input_v.write_text(print_design(design))
    tb_v.write_text(make_testbench(design, stim))

    subst = {
        "input": str(input_v),
        "testbench": str(tb_v),
        "top": design.top,
        "workdir": str(workdir),
        "trace_out": str(trace_out),
    }
    cmd = adapter.command.format(**subst)

    env = dict(os.environ)
    prefix = env.get(TOOL_PATH_ENV)
    if prefix:
        env["PATH"] = prefix + os.pathsep + env.get("PATH", "")

    first = shlex.split(cmd)[0] if cmd.strip() else ""
    resolved = shutil.which(first, path=env.get("PATH")) if first else None
    looks_like_shell = any(ch in cmd for ch in "|&;><$")
    if resolved is None and not looks_like_shell:
        return ToolResult(ADAPTER_ERROR,
                          detail=f"tool binary {first!r} not found")

    try:
        proc = subprocess.run(cmd, shell=True, cwd=str(workdir), env=env,
                              stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
                              timeout=adapter.timeout)
    except subprocess.TimeoutExpired:
        return ToolResult(TIMEOUT, detail=f"after {adapter.timeout}s")
    if proc.returncode in (126, 127):
        return ToolResult(ADAPTER_ERROR, exit_code=proc.returncode,
                          detail=f"command not runnable: {_excerpt(proc.stdout, 200)}")
    if proc.returncode != adapter.expect_exit:
        return ToolResult(CRASH, exit_code=proc.returncode,
                          output_excerpt=_excerpt(proc.stdout))
    raw_out.write_bytes(proc.stdout)

    if adapter.normalizer:
        ncmd = adapter.normalizer.format(raw=str(raw_out), **subst)
        try:
            nproc = subprocess.run(ncmd, shell=True, cwd=str(workdir), env=env,
                                   stdout=subprocess.PIPE,
                                   stderr=subprocess.STDOUT,
                                   timeout=adapter.timeout)
        except subprocess.TimeoutExpired:
            return ToolResult(ADAPTER_ERROR, detail="normalizer timed out")
        if nproc.returncode != 0:
            return ToolResult(ADAPTER_ERROR, exit_code=nproc.returncode,
                              detail=f"normalizer failed: {_excerpt(nproc.stdout, 200)}")
    elif not trace_out.exists():
        # no normalizer: tool stdout is taken as the trace
        trace_out.write_bytes(proc.stdout)

    try:
        trace = parse_trace(trace_out.read_text())
    except (BitTableError, OSError) as e:
        return ToolResult(ADAPTER_ERROR, detail=f"bad trace output: {e}")
    return ToolResult("trace", trace=trace)


def cross_tool_differential(design: Design, adapters, stim, workdir,
                            include_internal: bool = True) -> OracleVerdict:
    """Run every tool on `design`; Equivalent iff all trace pairs agree."""
    if len(adapters) + (1 if include_internal else 0) < 2:
        raise AdapterConfigError("cross-tool comparison needs >= 2 traces")
    traces = []
    if include_internal:
        traces.append(("internal", simulate(design, stim)))
    workdir = Path(workdir)
    for i, adapter in enumerate(adapters):
        result = run_external_tool(adapter, design, stim,
                                   workdir / f"tool_{i}_{adapter.name}")
        if result.kind == CRASH:
            return OracleVerdict(CRASH, tool=adapter.name,
                                 exit_code=result.exit_code,
                                 output_excerpt=result.output_excerpt)
        if result.kind == TIMEOUT:
            return OracleVerdict(TIMEOUT, tool=adapter.name,
                                 detail=result.detail)
        if result.kind == ADAPTER_ERROR:
            return OracleVerdict(ADAPTER_ERROR, tool=adapter.name,
                                 exit_code=result.exit_code,
                                 detail=result.detail)
        traces.append((adapter.name, result.trace))
    for i in range(len(traces)):
        for j in range(i + 1, len(traces)):
            (na, ta), (nb, tb) = traces[i], traces[j]
            tv = compare_traces(ta, tb)
            if tv.kind != EQUIVALENT:
                return _from_trace_verdict(tv, tool=f"{na}|{nb}")
    return OracleVerdict(EQUIVALENT)
