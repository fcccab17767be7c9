import dataclasses

import pytest

from hdlfuzz.ast import (
    AlwaysBlock, Binary, Const, ContinuousAssign, Design, ModuleDef,
    NonBlocking, Port, Ref, RegDecl, INPUT, OUTPUT, check_design,
    design_statement_count,
)
from hdlfuzz.equiv import OracleVerdict
from hdlfuzz.errors import FlakyPredicateError
from hdlfuzz.generate import generate_seed
from hdlfuzz.triage import (
    BugReport, DedupDB, FailureSignature, dedup, load_report,
    normalize_failure_text, persist_report, reduce, signature,
    single_deletion_candidates,
)
from conftest import SMALL_GEN


def forty_statement_design():
    regs = [RegDecl(f"r{i}", 4, False, 0) for i in range(8)]
    stmts = []
    for k in range(40):
        i = k % 8
        stmts.append(NonBlocking(Ref(f"r{i}"),
                                 Binary("+", Ref(f"r{(i + 1) % 8}"),
                                        Const(k % 16, 4))))
    top = ModuleDef("top", (
        Port("clk", INPUT, 1), Port("a", INPUT, 4), Port("y", OUTPUT, 4)), (
        *regs,
        ContinuousAssign(Ref("y"), Binary("^", Ref("r0"), Ref("a"))),
        AlwaysBlock(tuple(stmts), "clk")))
    d = Design((top,), "top")
    check_design(d)
    return d


def contains_marker(design):
    """Predicate: some statement adds the constant 13."""
    from hdlfuzz.ast import iter_stmt_lists
    for m in design.modules:
        for _, stmts in iter_stmt_lists(m):
            for s in stmts:
                if isinstance(s, NonBlocking) and isinstance(s.rhs, Binary) \
                        and isinstance(s.rhs.right, Const) \
                        and s.rhs.right.value == 13:
                    return True
    return False


def test_reduce_keeps_needed_statement_and_is_one_minimal():
    d = forty_statement_design()
    assert contains_marker(d)
    reduced = reduce(d, contains_marker)
    assert contains_marker(reduced)
    assert design_statement_count(reduced) <= design_statement_count(d) // 2
    # brute-force 1-minimality oracle: no single region deletion keeps it
    for cand in single_deletion_candidates(reduced):
        try:
            check_design(cand)
        except Exception:
            continue
        assert not contains_marker(cand)


def test_reduce_degenerate_predicate_minimizes_hard():
    d = forty_statement_design()
    reduced = reduce(d, lambda _: True)
    assert design_statement_count(reduced) == 0
    # items and modules also fully pruned except the protected top
    assert len(reduced.modules) == 1
    assert reduced.modules[0].items == ()


def test_reduce_flaky_predicate_rejected():
    d = forty_statement_design()
    with pytest.raises(FlakyPredicateError):
        reduce(d, lambda _: False)


def test_reduce_never_grows():
    d = generate_seed(dataclasses.replace(SMALL_GEN, rng_seed=2))
    before = design_statement_count(d)
    reduced = reduce(d, lambda x: len(x.modules) == len(d.modules))
    assert design_statement_count(reduced) <= before


def test_normalization_strips_noise():
    a = ("FATAL: assertion failed at /tmp/scratch-abc123/x/elab.cc:441 "
         "(0xdeadbeef)\n  in pass 2026-01-01 12:00:01")
    b = ("FATAL: assertion failed at /tmp/scratch-zzz999/y/elab.cc:77 "
         "(0x1234)\n  in pass 2026-02-03 04:05:06")
    assert normalize_failure_text(a) == normalize_failure_text(b)


def test_signature_equal_up_to_paths_and_lines():
    v1 = OracleVerdict("crash", tool="t", exit_code=1,
                       output_excerpt="boom at /tmp/dir1/f.cc:10 (0xab)")
    v2 = OracleVerdict("crash", tool="t", exit_code=1,
                       output_excerpt="boom at /var/dir2/g.cc:99 (0xcd)")
    assert signature(v1).digest == signature(v2).digest


def test_mismatch_signature_ignores_cycle():
    a = OracleVerdict("mismatch", tool="x|y", cycle=3, signal="out0")
    b = OracleVerdict("mismatch", tool="x|y", cycle=17, signal="out0")
    c = OracleVerdict("mismatch", tool="x|y", cycle=3, signal="out1")
    assert signature(a).digest == signature(b).digest
    assert signature(a).digest != signature(c).digest


def test_signature_rejects_equivalent_verdicts():
    with pytest.raises(ValueError):
        signature(OracleVerdict("equivalent"))


def test_dedup_roundtrip(tmp_path):
    db = DedupDB(tmp_path / "sigs.txt")
    sig = FailureSignature.make("crash", "toolA", "some failure text")
    assert dedup(sig, db) is True
    assert dedup(sig, db) is False
    db2 = DedupDB(tmp_path / "sigs.txt")  # persistence across restarts
    assert dedup(sig, db2) is False
    other = FailureSignature.make("crash", "toolB", "some failure text")
    assert dedup(other, db2) is True


def make_report(ident="bug_0001"):
    return BugReport(
        ident=ident, classification="M", tool="mock:A", seed_id="iter0001/v000",
        design_text="module top(a);\n  input a;\nendmodule\n",
        seed_design_text="module top(a);\n  input a;\nendmodule\n",
        stimulus_text="a 1\n\n0\n1\n",
        lineage_text="seed_id: x\n",
        verdict_summary="MISMATCH signal=y cycle=3",
        signature_digest="abcd", signature_text="mismatch:mock:A\nsignal=y",
        replay_command="hdlfuzz replay .", created="2026-01-01T00:00:00")


def test_persist_and_load_report(tmp_path):
    report = make_report()
    rdir = persist_report(report, tmp_path)
    assert (rdir / "design.v").exists()
    assert (rdir / "stimulus.txt").exists()
    assert (rdir / "lineage.txt").exists()
    loaded = load_report(rdir)
    assert loaded.ident == report.ident
    assert loaded.classification == "M"
    assert loaded.design_text == report.design_text
    assert loaded.signature_digest == "abcd"


def test_persist_no_overwrite(tmp_path):
    persist_report(make_report(), tmp_path)
    with pytest.raises(FileExistsError):
        persist_report(make_report(), tmp_path)
    persist_report(make_report("bug_0002"), tmp_path)  # distinct id is fine


def test_persist_readonly_dir_fails(tmp_path):
    import os
    if os.geteuid() == 0:
        pytest.skip("permission bits do not bind root")
    ro = tmp_path / "ro"
    ro.mkdir()
    ro.chmod(0o500)
    try:
        with pytest.raises(OSError):
            persist_report(make_report(), ro)
    finally:
        ro.chmod(0o700)
