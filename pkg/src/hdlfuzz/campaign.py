"""Campaign orchestration: the generate/profile/mutate/select/check loop.

Per iteration: obtain a seed (fresh or fixed), profile it, produce N_pool
variants, rank them by posterior and keep k, evaluate each against the
configured oracle, and route failures through reduction, dedup and report
persistence. All randomness derives from the master seed through a
splittable label scheme (sha256 over (master, labels...)), so campaign logs
are byte-identical for identical configs in internal-oracle mode regardless
of worker count, and a killed campaign can resume from its corpus directory
without re-reporting known signatures.
"""

import hashlib
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .ast import Design
from .equiv import (
    CRASH, OracleVerdict, cross_tool_differential, internal_differential,
)
from .errors import HdlError, SimulatedCrash
from .faults import mock_buggy_synthesizer
from .generate import (
    GenConfig, dump_stimulus, generate_seed, generate_stimulus,
    parse_stimulus,
)
from .metrics import structural_metrics
from .mutate import MutationConfig, Variant, mutate
from .parser import parse_design
from .printer import print_design
from .select import VariantPool, VariantRecord, dump_posterior, posterior, select_top_k
from .simulate import EQUIVALENT, MISMATCH, compare_traces, simulate, profile
from .smt import export_variant_miter, find_solver, solve_miter
from .triage import (
    BugReport, DedupDB, load_report, now_stamp, persist_report, reduce,
    signature,
)
from .depgraph import timing_complexity

SCRATCH_ENV = "HDLFUZZ_SCRATCH"

ORACLES = ("internal", "cross-tool", "smt-export", "mock")


def derive_seed(master: int, *labels) -> int:
    """Deterministic 63-bit child seed from the master and a label path."""
    key = repr((master,) + labels).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


@dataclass(frozen=True)
class CampaignConfig:
    gen: GenConfig = GenConfig()
    mut: MutationConfig = MutationConfig()
    n_pool: int = 8
    k: int = 4
    max_iter: int = 10
    oracle: str = "internal"
    adapters: tuple = ()
    mock_faults: tuple = ("A", "B", "C")
    refs_threshold: int = 12
    out_dir: str = "campaign-out"
    master_seed: int = 0
    workers: int = 1
    stimulus_cycles: int = 256
    seed_mode: str = "per-iteration"  # or "fixed"
    unroll: int = 8
    stop_after_first_bug_per_tool: bool = True

    def check(self):
        if self.oracle not in ORACLES:
            raise ValueError(f"unknown oracle {self.oracle!r}")
        if not 0 < self.k <= self.n_pool:
            raise ValueError(f"k={self.k} must be in 1..n_pool={self.n_pool}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.seed_mode not in ("per-iteration", "fixed"):
            raise ValueError(f"unknown seed mode {self.seed_mode!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.oracle == "smt-export" and self.mut.guard_mode != "tautological":
            raise ValueError(
                "smt-export campaigns need tautological guards: profiled "
                "guards make dead code falsely inequivalent under SMT")
        self.gen.check()
        self.mut.check()
        for a in self.adapters:
            a.check()


@dataclass
class CampaignStats:
    iterations: int = 0
    variants_generated: int = 0
    variants_selected: int = 0
    verdicts: dict = field(default_factory=dict)
    distinct_signatures: int = 0
    bugs_reported: int = 0
    iteration_errors: int = 0
    wall_clock: dict = field(default_factory=dict)

    def count_verdict(self, kind):
        self.verdicts[kind] = self.verdicts.get(kind, 0) + 1

    @property
    def variants_evaluated(self):
        return sum(self.verdicts.values())


# --------------------------------------------------------------------------
# Oracle evaluation (top-level functions so worker processes can pickle them)
# --------------------------------------------------------------------------

def _mock_eval(seed_design, variant_design, stim, fault, mock_seed, threshold):
    tool = f"mock:{fault}"
    try:
        cs = mock_buggy_synthesizer(seed_design, fault, mock_seed, threshold)
    except SimulatedCrash as e:
        return OracleVerdict(CRASH, tool=tool, exit_code=134,
                             output_excerpt=str(e) + "\n" + e.backtrace,
                             detail="seed"), "seed"
    try:
        cv = mock_buggy_synthesizer(variant_design, fault, mock_seed, threshold)
    except SimulatedCrash as e:
        return OracleVerdict(CRASH, tool=tool, exit_code=134,
                             output_excerpt=str(e) + "\n" + e.backtrace,
                             detail="variant"), "variant"
    tv = compare_traces(simulate(cs, stim), simulate(cv, stim))
    if tv.kind == EQUIVALENT:
        return OracleVerdict(EQUIVALENT, tool=tool), "variant"
    return OracleVerdict(MISMATCH, tool=tool, cycle=tv.cycle, signal=tv.signal,
                         expected=tv.expected, actual=tv.actual), "variant"


def _evaluate(args):
    (index, mode, seed_design, variant_design, stim, tools, mock_seed,
     threshold, adapters, scratch) = args
    results = []
    if mode == "internal":
        results.append(("internal",
                        internal_differential(seed_design, variant_design, stim),
                        "variant"))
    elif mode == "mock":
        for fault in tools:
            verdict, trigger = _mock_eval(seed_design, variant_design, stim,
                                          fault, mock_seed, threshold)
            results.append((f"mock:{fault}", verdict, trigger))
    elif mode == "cross-tool":
        verdict = internal_differential(seed_design, variant_design, stim)
        results.append(("internal", verdict, "variant"))
        if adapters:
            verdict = cross_tool_differential(
                variant_design, adapters, stim, Path(scratch) / f"v{index:03d}")
            results.append(("cross", verdict, "variant"))
    return index, results


# --------------------------------------------------------------------------
# The campaign proper
# --------------------------------------------------------------------------

class _Log:
    def __init__(self, path, resume):
        self.path = Path(path)
        mode = "a" if resume else "w"
        self.fh = open(self.path, mode)

    def line(self, text):
        self.fh.write(text + "\n")
        self.fh.flush()

    def close(self):
        self.fh.close()


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def run_campaign(cfg: CampaignConfig) -> CampaignStats:
    cfg.check()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports_dir = out / "reports"
    db = DedupDB(out / "signatures.txt")
    stats = CampaignStats()
    resume = (out / "campaign.log").exists()
    log = _Log(out / "campaign.log", resume)
    if resume:
        log.line("resume")
    else:
        log.line(f"campaign oracle={cfg.oracle} n_pool={cfg.n_pool} "
                 f"k={cfg.k} max_iter={cfg.max_iter} seed={cfg.master_seed}")
    if cfg.oracle == "cross-tool" and not cfg.adapters:
        log.line("warning: no external adapters configured; "
                 "cross-tool oracle degrades to internal differential")

    # tools that already produced a recorded bug stop being exercised
    bugged_tools = set()
    if reports_dir.exists():
        for rdir in sorted(reports_dir.iterdir()):
            if (rdir / "report.txt").exists():
                bugged_tools.add(load_report(rdir).tool)

    mock_seed = derive_seed(cfg.master_seed, "mock")
    fixed_seed_design = None
    fixed_stim = None
    phases = {"generate": 0.0, "profile": 0.0, "mutate": 0.0,
              "select": 0.0, "evaluate": 0.0, "triage": 0.0}

    pool = None
    if cfg.workers > 1:
        pool = ProcessPoolExecutor(max_workers=cfg.workers)

    try:
        for i in range(1, cfg.max_iter + 1):
            iter_dir = out / f"iter_{i:04d}"
            if (iter_dir / "done").exists():
                continue
            try:
                bugs_before = stats.bugs_reported
                _run_iteration(cfg, i, iter_dir, db, reports_dir, bugged_tools,
                               mock_seed, stats, log, phases, pool,
                               fixed_seed_design, fixed_stim)
                stats.iterations += 1
                if cfg.seed_mode == "fixed" and fixed_seed_design is None:
                    fixed_seed_design = parse_design(
                        (iter_dir / "seed.v").read_text())
                    fixed_stim = parse_stimulus(
                        (iter_dir / "stimulus.txt").read_text())
            except HdlError as e:
                stats.iteration_errors += 1
                log.line(f"iter {i:04d} error {type(e).__name__}: {e}")
                continue
            if (cfg.stop_after_first_bug_per_tool
                    and _all_tools_bugged(cfg, bugged_tools)):
                log.line(f"iter {i:04d} all tools have recorded bugs; stopping")
                break
    finally:
        if pool is not None:
            pool.shutdown()
        stats.distinct_signatures = len(db)
        log.line(f"done iterations={stats.iterations} "
                 f"evaluated={stats.variants_evaluated} "
                 f"bugs={stats.bugs_reported} "
                 f"signatures={stats.distinct_signatures}")
        log.close()
        stats.wall_clock = phases
        with open(out / "stats.txt", "w") as fh:
            fh.write(f"iterations: {stats.iterations}\n")
            fh.write(f"variants_generated: {stats.variants_generated}\n")
            fh.write(f"variants_selected: {stats.variants_selected}\n")
            fh.write(f"variants_evaluated: {stats.variants_evaluated}\n")
            for kind in sorted(stats.verdicts):
                fh.write(f"verdict_{kind}: {stats.verdicts[kind]}\n")
            fh.write(f"distinct_signatures: {stats.distinct_signatures}\n")
            fh.write(f"bugs_reported: {stats.bugs_reported}\n")
            fh.write(f"iteration_errors: {stats.iteration_errors}\n")
            for phase, secs in phases.items():
                fh.write(f"wall_{phase}: {secs:.3f}\n")
    return stats


def _all_tools_bugged(cfg, bugged_tools):
    if cfg.oracle == "mock":
        return all(f"mock:{f}" in bugged_tools for f in cfg.mock_faults)
    return False


def _run_iteration(cfg, i, iter_dir, db, reports_dir, bugged_tools, mock_seed,
                   stats, log, phases, pool, fixed_seed_design, fixed_stim):
    iter_dir.mkdir(parents=True, exist_ok=True)
    (iter_dir / "variants").mkdir(exist_ok=True)
    log.line(f"iter {i:04d} begin")

    t0 = time.monotonic()
    if cfg.seed_mode == "fixed" and fixed_seed_design is not None:
        seed_design, stim = fixed_seed_design, fixed_stim
    else:
        seed_label = 1 if cfg.seed_mode == "fixed" else i
        gen_cfg = replace(cfg.gen,
                          rng_seed=derive_seed(cfg.master_seed, "gen", seed_label))
        seed_design = generate_seed(gen_cfg)
        stim = generate_stimulus(
            seed_design, cfg.stimulus_cycles,
            derive_seed(cfg.master_seed, "stim", seed_label),
            reset_cycles=cfg.gen.reset_cycles)
    (iter_dir / "seed.v").write_text(print_design(seed_design))
    (iter_dir / "stimulus.txt").write_text(dump_stimulus(stim))
    seed_metrics = structural_metrics(seed_design)
    seed_timing = timing_complexity(seed_design)
    phases["generate"] += time.monotonic() - t0
    log.line(f"iter {i:04d} seed lines={seed_metrics.lines} "
             f"v={seed_metrics.v} c={seed_metrics.c} s={seed_metrics.s} "
             f"refs={seed_metrics.refs} timing={seed_timing}")

    t0 = time.monotonic()
    prof = profile(seed_design, stim)
    phases["profile"] += time.monotonic() - t0

    t0 = time.monotonic()
    variants = []
    for j in range(cfg.n_pool):
        mut_cfg = replace(cfg.mut,
                          rng_seed=derive_seed(cfg.master_seed, "mutate", i, j))
        v = mutate(seed_design, prof, mut_cfg, seed_id=f"iter{i:04d}")
        variants.append(v)
        (iter_dir / "variants" / f"v{j:03d}.v").write_text(
            print_design(v.design))
        (iter_dir / "variants" / f"v{j:03d}.lineage.txt").write_text(
            lineage_text(v, mut_cfg))
    stats.variants_generated += len(variants)
    phases["mutate"] += time.monotonic() - t0

    t0 = time.monotonic()
    records = tuple(VariantRecord(f"v{j:03d}", v.metrics, v.timing)
                    for j, v in enumerate(variants))
    vpool = VariantPool(seed_metrics, seed_timing, records, cfg.k)
    post = posterior(vpool)
    selected = select_top_k(vpool)
    (iter_dir / "posterior.txt").write_text(
        dump_posterior(post, [r.timing for r in records]))
    for j, v in enumerate(variants):
        log.line(f"iter {i:04d} variant v{j:03d} lines={v.metrics.lines} "
                 f"v={v.metrics.v} c={v.metrics.c} s={v.metrics.s} "
                 f"refs={v.metrics.refs} timing={v.timing} "
                 f"dist={_fmt(post.distances[j])} post={_fmt(post.posteriors[j])}")
    log.line(f"iter {i:04d} select {','.join(selected)}")
    stats.variants_selected += len(selected)
    phases["select"] += time.monotonic() - t0

    t0 = time.monotonic()
    by_id = {f"v{j:03d}": v for j, v in enumerate(variants)}
    scratch_root = os.environ.get(SCRATCH_ENV, str(iter_dir / "scratch"))
    tools = [f for f in cfg.mock_faults
             if f"mock:{f}" not in bugged_tools] if cfg.oracle == "mock" else ()

    verdict_lines = []
    failures = []  # (variant id, tool, verdict, trigger design)
    if cfg.oracle == "smt-export":
        for ident in selected:
            v = by_id[ident]
            miter = export_variant_miter(seed_design, v, cfg.unroll)
            miter_path = iter_dir / f"{ident}.miter.smt2"
            miter_path.write_text(miter)
            answer = solve_miter(miter) if find_solver() else None
            if answer == "sat":
                verdict = OracleVerdict(MISMATCH, tool="smt",
                                        signal="<miter>",
                                        detail="solver found a distinguishing model")
                failures.append((ident, "smt", verdict, v.design))
                stats.count_verdict(MISMATCH)
            else:
                stats.count_verdict("exported" if answer is None else EQUIVALENT)
            verdict_lines.append(
                f"iter {i:04d} verdict {ident} tool=smt "
                f"{'exported' if answer is None else answer}")
    else:
        jobs = []
        for ident in selected:
            v = by_id[ident]
            jobs.append((int(ident[1:]), cfg.oracle, seed_design, v.design,
                         stim, tuple(tools), mock_seed, cfg.refs_threshold,
                         cfg.adapters, scratch_root))
        if pool is not None:
            results = list(pool.map(_evaluate, jobs))
        else:
            results = [_evaluate(j) for j in jobs]
        results.sort(key=lambda r: r[0])
        for index, tool_results in results:
            ident = f"v{index:03d}"
            for tool, verdict, trigger in tool_results:
                stats.count_verdict(verdict.kind)
                verdict_lines.append(
                    f"iter {i:04d} verdict {ident} tool={tool} {verdict.summary()}")
                if verdict.kind in (MISMATCH, CRASH):
                    design = (seed_design if trigger == "seed"
                              else by_id[ident].design)
                    failures.append((ident, tool, verdict, design))
    for line in verdict_lines:
        log.line(line)
    (iter_dir / "verdicts.txt").write_text(
        "\n".join(verdict_lines) + ("\n" if verdict_lines else ""))
    phases["evaluate"] += time.monotonic() - t0

    t0 = time.monotonic()
    for ident, tool, verdict, trigger_design in failures:
        if cfg.stop_after_first_bug_per_tool and tool in bugged_tools:
            continue
        handled = _triage_failure(cfg, i, ident, tool, verdict, trigger_design,
                                  stim, mock_seed, db, reports_dir, by_id, log,
                                  seed_design)
        if handled:
            stats.bugs_reported += 1
            bugged_tools.add(tool)
    phases["triage"] += time.monotonic() - t0

    (iter_dir / "done").write_text("ok\n")
    log.line(f"iter {i:04d} end")


def lineage_text(variant: Variant, mut_cfg: MutationConfig) -> str:
    lines = [f"seed_id: {variant.lineage.seed_id}",
             f"rng_seed: {variant.lineage.rng_seed}",
             f"guard_mode: {mut_cfg.guard_mode}"]
    for r in variant.lineage.records:
        lines.append(f"{r.kind} module={r.module} path={r.path!r} "
                     f"index={r.index} guard={r.guard_text!r} "
                     f"mode={r.guard_mode} {r.detail}")
    return "\n".join(lines) + "\n"


def make_failure_predicate(tool: str, verdict: OracleVerdict, stim,
                           mock_seed: int, refs_threshold: int,
                           seed_design: Design = None):
    """Self-contained bug predicate for the reducer and for replay.

    Crash: compiling the candidate still crashes with the same normalized
    signature. Mismatch: the candidate's compiled form still disagrees with
    the compiled seed baseline on the recorded signal.
    """
    if tool.startswith("mock:"):
        fault = tool.split(":", 1)[1]

        if verdict.kind == CRASH:
            want = signature(verdict, verdict.output_excerpt)

            def predicate(design):
                try:
                    mock_buggy_synthesizer(design, fault, mock_seed,
                                           refs_threshold)
                except SimulatedCrash as e:
                    got = signature(
                        OracleVerdict(CRASH, tool=tool,
                                      output_excerpt=str(e) + "\n" + e.backtrace),
                        None)
                    return got.digest == want.digest
                return False
            return predicate

        if seed_design is None:
            def predicate(design):
                return False
            return predicate
        baseline = simulate(
            mock_buggy_synthesizer(seed_design, fault, mock_seed,
                                   refs_threshold), stim)

        def predicate(design):
            try:
                compiled = mock_buggy_synthesizer(design, fault, mock_seed,
                                                  refs_threshold)
            except SimulatedCrash:
                return False
            tv = compare_traces(baseline, simulate(compiled, stim))
            return tv.kind == MISMATCH and tv.signal == verdict.signal
        return predicate

    if tool == "internal" and seed_design is not None:
        def predicate(design):  # EMI violation, i.e. a bug in this package
            tv = compare_traces(simulate(seed_design, stim),
                                simulate(design, stim))
            return tv.kind == MISMATCH and tv.signal == verdict.signal
        return predicate

    def predicate(design):  # external tools are not re-run during reduction
        return False
    return predicate


def _triage_failure(cfg, i, ident, tool, verdict, trigger_design, stim,
                    mock_seed, db, reports_dir, by_id, log,
                    seed_design=None) -> bool:
    sig = signature(verdict, verdict.output_excerpt)
    if db.known(sig):
        log.line(f"iter {i:04d} duplicate {ident} tool={tool} sig={sig.digest}")
        return False

    predicate = make_failure_predicate(tool, verdict, stim, mock_seed,
                                       cfg.refs_threshold, seed_design)
    reduced = trigger_design
    try:
        if predicate(trigger_design):
            reduced = reduce(trigger_design, predicate)
    except HdlError as e:
        log.line(f"iter {i:04d} reduce-error {ident} {type(e).__name__}: {e}")

    reports_dir.mkdir(parents=True, exist_ok=True)
    seq = len(list(reports_dir.glob("bug_*"))) + 1
    report_id = f"bug_{seq:04d}"
    classification = "C" if verdict.kind == CRASH else "M"
    variant = by_id.get(ident)
    lineage = lineage_text(variant, cfg.mut) if variant else "seed failure\n"
    report = BugReport(
        ident=report_id,
        classification=classification,
        tool=tool,
        seed_id=f"iter{i:04d}/{ident}",
        design_text=print_design(reduced),
        seed_design_text=print_design(seed_design) if seed_design else "",
        stimulus_text=dump_stimulus(stim),
        lineage_text=lineage + _replay_params(cfg, mock_seed),
        verdict_summary=verdict.summary(),
        signature_digest=sig.digest,
        signature_text=f"{sig.kind}:{sig.tool}\n{sig.text}",
        replay_command=f"hdlfuzz replay {reports_dir / report_id}",
        created=now_stamp(),
    )
    rdir = persist_report(report, reports_dir)
    db.record(sig, report_id)
    log.line(f"iter {i:04d} bug {ident} tool={tool} kind={verdict.kind} "
             f"sig={sig.digest} report={report_id} "
             f"stmts={_stmt_count_text(trigger_design)}->"
             f"{_stmt_count_text(reduced)}")
    return True


def _replay_params(cfg, mock_seed) -> str:
    return (f"replay_oracle: {cfg.oracle}\n"
            f"replay_mock_seed: {mock_seed}\n"
            f"replay_refs_threshold: {cfg.refs_threshold}\n")


def _stmt_count_text(design) -> int:
    from .ast import design_statement_count
    return design_statement_count(design)


# --------------------------------------------------------------------------
# Replay
# --------------------------------------------------------------------------

def replay_report(report_dir) -> tuple:
    """Re-run a persisted report; returns (verdict summary, reproduced?).

    The recorded differential compares the compiled seed baseline against
    the compiled (reduced) trigger, exactly as the campaign evaluated it.
    """
    report = load_report(report_dir)
    design = parse_design(report.design_text)
    stim = parse_stimulus(report.stimulus_text)
    params = {}
    for line in report.lineage_text.splitlines():
        if line.startswith("replay_"):
            key, _, value = line.partition(": ")
            params[key] = value
    tool = report.tool
    if tool.startswith("mock:"):
        fault = tool.split(":", 1)[1]
        mock_seed = int(params.get("replay_mock_seed", "0"))
        threshold = int(params.get("replay_refs_threshold", "12"))
        try:
            compiled = mock_buggy_synthesizer(design, fault, mock_seed,
                                              threshold)
        except SimulatedCrash as e:
            verdict = OracleVerdict(CRASH, tool=tool, exit_code=134,
                                    output_excerpt=str(e) + "\n" + e.backtrace)
            new_sig = signature(verdict, verdict.output_excerpt)
            return verdict.summary(), (report.classification == "C"
                                       and new_sig.digest == report.signature_digest)
        if report.classification == "C":
            return "no crash on replay", False
        if not report.seed_design_text:
            return "report lacks the seed baseline", False
        seed_design = parse_design(report.seed_design_text)
        baseline = simulate(
            mock_buggy_synthesizer(seed_design, fault, mock_seed, threshold),
            stim)
        tv = compare_traces(baseline, simulate(compiled, stim))
        if tv.kind != MISMATCH:
            return "EQUIVALENT", False
        verdict = OracleVerdict(MISMATCH, tool=tool, cycle=tv.cycle,
                                signal=tv.signal, expected=tv.expected,
                                actual=tv.actual)
        new_sig = signature(verdict, verdict.output_excerpt)
        return verdict.summary(), new_sig.digest == report.signature_digest
    if tool == "internal":
        if not report.seed_design_text:
            return "report lacks the seed baseline", False
        seed_design = parse_design(report.seed_design_text)
        verdict = internal_differential(seed_design, design, stim)
        if verdict.kind != MISMATCH:
            return verdict.summary(), False
        new_sig = signature(verdict, verdict.output_excerpt)
        return verdict.summary(), new_sig.digest == report.signature_digest
    return "replay supports mock and internal reports only", False
