import dataclasses
import shutil

import pytest

from hdlfuzz.equiv import (
    ADAPTER_ERROR, CRASH, TIMEOUT, ToolAdapter, cross_tool_differential,
    internal_differential, make_testbench, run_external_tool,
)
from hdlfuzz.errors import AdapterConfigError
from hdlfuzz.generate import generate_seed, generate_stimulus
from hdlfuzz.mutate import MutationConfig, mutate
from hdlfuzz.simulate import dump_trace, profile, simulate
from conftest import SMALL_GEN, make_stim


@pytest.fixture
def seed_variant_stim():
    d = generate_seed(dataclasses.replace(SMALL_GEN, rng_seed=0))
    stim = generate_stimulus(d, 32, 0)
    prof = profile(d, stim)
    v = mutate(d, prof, MutationConfig(rng_seed=0, p_wrap=0.4), "s0")
    return d, v.design, stim


def test_internal_differential_equivalent(seed_variant_stim):
    d, vd, stim = seed_variant_stim
    assert internal_differential(d, vd, stim).is_equivalent
    assert internal_differential(d, d, stim).is_equivalent


def test_internal_differential_locates_first_flip(seed_variant_stim):
    from test_smt import invert_first_output
    d, _, stim = seed_variant_stim
    bad = invert_first_output(d)
    verdict = internal_differential(d, bad, stim)
    assert verdict.kind == "mismatch"
    # brute-force oracle: earliest (cycle, signal-position) that differs
    ta, tb = simulate(d, stim), simulate(bad, stim)
    expected = None
    for cycle, (ra, rb) in enumerate(zip(ta.rows, tb.rows)):
        for (name, _), va, vb in zip(ta.signals, ra, rb):
            if va != vb:
                expected = (cycle, name)
                break
        if expected:
            break
    assert (verdict.cycle, verdict.signal) == expected


def test_mismatched_interface_is_adapter_error(dff_design, xor_design):
    stim = make_stim([("d", 1)], [(0,), (1,)])
    verdict = internal_differential(dff_design, xor_design, stim)
    assert verdict.kind == ADAPTER_ERROR


def test_fixture_adapter_roundtrip(tmp_path, seed_variant_stim):
    d, _, stim = seed_variant_stim
    trace_text = dump_trace(simulate(d, stim))
    canned = tmp_path / "canned.txt"
    canned.write_text(trace_text)
    adapter = ToolAdapter("fixture",
                      f"test -f {{input}} && cp {canned} {{trace_out}}")
    result = run_external_tool(adapter, d, stim, tmp_path / "w")
    assert result.kind == "trace"
    assert dump_trace(result.trace) == trace_text


def test_adapter_crash_verdict(tmp_path, seed_variant_stim):
    d, _, stim = seed_variant_stim
    adapter = ToolAdapter("broken", "false --input {input}")
    result = run_external_tool(adapter, d, stim, tmp_path / "w")
    assert result.kind == CRASH and result.exit_code == 1


def test_adapter_timeout(tmp_path, seed_variant_stim):
    d, _, stim = seed_variant_stim
    adapter = ToolAdapter("slow", "sleep 30 && cat {input}", timeout=0.3)
    result = run_external_tool(adapter, d, stim, tmp_path / "w")
    assert result.kind == TIMEOUT


def test_missing_binary_is_adapter_error(tmp_path, seed_variant_stim):
    d, _, stim = seed_variant_stim
    adapter = ToolAdapter("ghost", "definitely-not-a-tool {input}")
    result = run_external_tool(adapter, d, stim, tmp_path / "w")
    assert result.kind == ADAPTER_ERROR
    assert "not found" in result.detail


def test_adapter_config_validated():
    with pytest.raises(AdapterConfigError):
        ToolAdapter("x", "no placeholders").check()
    with pytest.raises(AdapterConfigError):
        ToolAdapter("x", "{input}", timeout=0).check()


def test_cross_tool_all_agree(tmp_path, seed_variant_stim):
    d, _, stim = seed_variant_stim
    trace_text = dump_trace(simulate(d, stim))
    canned = tmp_path / "canned.txt"
    canned.write_text(trace_text)
    adapters = [ToolAdapter(f"fix{i}",
                        f"test -f {{input}} && cp {canned} {{trace_out}}")
                for i in range(3)]
    verdict = cross_tool_differential(d, adapters, stim, tmp_path / "scratch")
    assert verdict.is_equivalent


def test_cross_tool_flipped_bit_located(tmp_path, seed_variant_stim):
    d, _, stim = seed_variant_stim
    trace = simulate(d, stim)
    rows = list(trace.rows)
    rows[7] = (rows[7][0] ^ 1,) + rows[7][1:]
    from hdlfuzz.simulate import Trace
    canned = tmp_path / "flipped.txt"
    canned.write_text(dump_trace(Trace(trace.signals, tuple(rows))))
    adapter = ToolAdapter("flip",
                      f"test -f {{input}} && cp {canned} {{trace_out}}")
    verdict = cross_tool_differential(d, [adapter], stim, tmp_path / "scratch")
    assert verdict.kind == "mismatch" and verdict.cycle == 7
    assert "internal" in verdict.tool and "flip" in verdict.tool


def test_cross_tool_crash_short_circuits(tmp_path, seed_variant_stim):
    d, _, stim = seed_variant_stim
    adapters = [ToolAdapter("boom", "false {input}"),
                ToolAdapter("fine", "cp {input} {trace_out}")]
    verdict = cross_tool_differential(d, adapters, stim, tmp_path / "scratch")
    assert verdict.kind == CRASH and verdict.tool == "boom"


def test_cross_tool_needs_two_traces(tmp_path, seed_variant_stim):
    d, _, stim = seed_variant_stim
    with pytest.raises(AdapterConfigError):
        cross_tool_differential(d, [], stim, tmp_path, include_internal=True)


def test_testbench_shape(seed_variant_stim):
    d, _, stim = seed_variant_stim
    tb = make_testbench(d, stim)
    assert tb.startswith("module tb;")
    assert f"{d.top} dut(" in tb
    assert tb.count("$write") >= stim.cycles
    assert "$finish;" in tb


@pytest.mark.skipif(shutil.which("iverilog") is None,
                    reason="no Verilog simulator installed")
def test_testbench_against_iverilog(tmp_path, seed_variant_stim):
    d, _, stim = seed_variant_stim
    adapter = ToolAdapter(
        "iverilog",
        "iverilog -g2005 -o {workdir}/sim {input} {testbench} "
        "&& {workdir}/sim > {trace_out}")
    result = run_external_tool(adapter, d, stim, tmp_path / "iv")
    assert result.kind == "trace"
    assert dump_trace(result.trace) == dump_trace(simulate(d, stim))
