"""Command-line interface.

Every pipeline stage is its own subcommand with file-based inputs and
outputs, so each stage can be scripted and tested in isolation. Exit codes:
0 success / no bugs, 1 usage error, 2 bugs or inequivalence found,
3 internal error. Diagnostics go to stderr as `hdlfuzz: error: ...` lines.
"""

import argparse
import configparser
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

from .ast import check_design, design_statement_count
from .campaign import (
    CampaignConfig, lineage_text, make_failure_predicate, replay_report,
    run_campaign,
)
from .depgraph import timing_complexity
from .equiv import OracleVerdict, ToolAdapter, internal_differential
from .errors import HdlError, HdlSyntaxError, SimulatedCrash
from .faults import FAULT_CLASSES, mock_buggy_synthesizer
from .generate import (
    GenConfig, dump_stimulus, generate_seed, generate_stimulus, parse_stimulus,
)
from .metrics import structural_metrics
from .mutate import MutationConfig, mutate
from .parser import parse_design
from .printer import print_design
from .select import (
    VariantPool, VariantRecord, dump_posterior, posterior, select_top_k,
)
from .simulate import MISMATCH, compare_traces, profile, simulate
from .smt import exhaustive_equiv, export_smt_miter, find_solver, solve_miter
from .triage import load_report, reduce

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BUGS = 2
EXIT_INTERNAL = 3


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"hdlfuzz: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _err(message):
    print(f"hdlfuzz: error: {message}", file=sys.stderr)


def _read_design(path):
    return parse_design(Path(path).read_text())


# --------------------------------------------------------------------------
# Config file (INI: [campaign], [generate], [mutate], [adapter:NAME])
# --------------------------------------------------------------------------

def _pair(text):
    a, b = text.split()
    return (int(a), int(b))


def load_config(path) -> CampaignConfig:
    ini = configparser.ConfigParser()
    with open(path) as fh:
        ini.read_file(fh)

    gen = GenConfig()
    if ini.has_section("generate"):
        g = ini["generate"]
        gen = GenConfig(
            line_budget=_pair(g.get("line_budget", "700 1000")),
            max_modules=g.getint("max_modules", 7),
            submodules=_pair(g.get("submodules", "2 6")),
            max_expr_depth=g.getint("max_expr_depth", 4),
            width_choices=tuple(int(x) for x in
                                g.get("width_choices", "2 4 6 8 12 16").split()),
            p_sequential=g.getfloat("p_sequential", 0.45),
            p_signed=g.getfloat("p_signed", 0.15),
            reset_cycles=g.getint("reset_cycles", 2),
            rng_seed=g.getint("rng_seed", 0),
        )
    mut = MutationConfig()
    if ini.has_section("mutate"):
        m = ini["mutate"]
        mut = MutationConfig(
            guard_mode=m.get("guard_mode", "profiled"),
            dead_budget=_pair(m.get("dead_budget", "2 8")),
            p_wrap=m.getfloat("p_wrap", 0.25),
            max_guards=m.getint("max_guards", 3),
            rng_seed=m.getint("rng_seed", 0),
        )
    adapters = []
    for section in ini.sections():
        if section.startswith("adapter:"):
            a = ini[section]
            adapters.append(ToolAdapter(
                name=section.split(":", 1)[1],
                command=a.get("command"),
                timeout=a.getfloat("timeout", 60.0),
                expect_exit=a.getint("expect_exit", 0),
                normalizer=a.get("normalizer", ""),
            ))
    kwargs = {}
    if ini.has_section("campaign"):
        c = ini["campaign"]
        for key in ("n_pool", "k", "max_iter", "master_seed", "workers",
                    "stimulus_cycles", "unroll", "refs_threshold"):
            if c.get(key) is not None:
                kwargs[key] = c.getint(key)
        for key in ("oracle", "out_dir", "seed_mode"):
            if c.get(key):
                kwargs[key] = c.get(key)
        if c.get("mock_faults"):
            kwargs["mock_faults"] = tuple(c.get("mock_faults").split())
        if c.get("stop_after_first_bug_per_tool") is not None:
            kwargs["stop_after_first_bug_per_tool"] = \
                c.getboolean("stop_after_first_bug_per_tool")
    return CampaignConfig(gen=gen, mut=mut, adapters=tuple(adapters), **kwargs)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_generate(args):
    cfg = load_config(args.config).gen if args.config else GenConfig()
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    design = generate_seed(cfg)
    Path(args.out).write_text(print_design(design))
    if args.stimulus_out:
        stim = generate_stimulus(design, args.cycles, cfg.rng_seed,
                                 reset_cycles=cfg.reset_cycles)
        Path(args.stimulus_out).write_text(dump_stimulus(stim))
    m = structural_metrics(design)
    print(f"generated {args.out}: lines={m.lines} v={m.v} c={m.c} "
          f"s={m.s} refs={m.refs}")
    return EXIT_OK


def cmd_mutate(args):
    design = _read_design(args.design)
    check_design(design)
    stim = parse_stimulus(Path(args.stimulus).read_text())
    prof = profile(design, stim)
    cfg = MutationConfig(guard_mode=args.mode, rng_seed=args.seed,
                         p_wrap=args.wrap, max_guards=args.max_guards)
    variant = mutate(design, prof, cfg, seed_id=Path(args.design).stem)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "variant.v").write_text(print_design(variant.design))
    (out_dir / "lineage.txt").write_text(lineage_text(variant, cfg))
    delta = variant.metrics.lines - structural_metrics(design).lines
    print(f"mutated -> {out_dir / 'variant.v'} (+{delta} lines, "
          f"timing {variant.timing})")
    return EXIT_OK


def cmd_select(args):
    seed = _read_design(args.seed_design)
    records = []
    for path in args.pool:
        d = _read_design(path)
        records.append(VariantRecord(Path(path).name, structural_metrics(d),
                                     timing_complexity(d)))
    pool = VariantPool(structural_metrics(seed), timing_complexity(seed),
                       tuple(records), args.k)
    post = posterior(pool)
    chosen = select_top_k(pool)
    if args.out:
        Path(args.out).write_text(
            dump_posterior(post, [r.timing for r in records]))
    for ident in chosen:
        print(ident)
    return EXIT_OK


def cmd_check(args):
    a = _read_design(args.designs[0])
    b = _read_design(args.designs[1])
    if args.mode == "internal":
        if not args.stimulus:
            _err("--stimulus is required in internal mode")
            return EXIT_USAGE
        stim = parse_stimulus(Path(args.stimulus).read_text())
        verdict = internal_differential(a, b, stim)
        print(verdict.summary())
        return EXIT_OK if verdict.is_equivalent else EXIT_BUGS
    if args.mode == "smt-export":
        text = export_smt_miter(a, b, args.unroll)
        out = args.out or "miter.smt2"
        Path(out).write_text(text)
        print(f"exported {out}")
        answer = solve_miter(text) if find_solver() else None
        if answer:
            print(f"solver: {answer}")
            return EXIT_OK if answer == "unsat" else EXIT_BUGS
        return EXIT_OK
    result = exhaustive_equiv(a, b, args.unroll, max_bits=args.max_bits)
    print("EQUIVALENT" if result.equivalent
          else f"MISMATCH after enumerating {result.assignments} inputs: "
               f"{result.counterexample}")
    return EXIT_OK if result.equivalent else EXIT_BUGS


def cmd_reduce(args):
    design = _read_design(args.design)
    stim = parse_stimulus(Path(args.stimulus).read_text())
    if args.mock_fault:
        seed_design = _read_design(args.seed_design) if args.seed_design else design
        try:
            compiled = mock_buggy_synthesizer(design, args.mock_fault,
                                              args.mock_seed,
                                              args.refs_threshold)
            baseline = simulate(
                mock_buggy_synthesizer(seed_design, args.mock_fault,
                                       args.mock_seed, args.refs_threshold),
                stim)
            tv = compare_traces(baseline, simulate(compiled, stim))
            if tv.kind != MISMATCH:
                _err("design does not trigger the fault")
                return EXIT_USAGE
            verdict = OracleVerdict(MISMATCH, tool=f"mock:{args.mock_fault}",
                                    signal=tv.signal)
        except SimulatedCrash as e:
            verdict = OracleVerdict("crash", tool=f"mock:{args.mock_fault}",
                                    output_excerpt=str(e) + "\n" + e.backtrace)
        predicate = make_failure_predicate(
            f"mock:{args.mock_fault}", verdict, stim, args.mock_seed,
            args.refs_threshold, seed_design)
    elif args.predicate_cmd:
        import tempfile

        def predicate(d):
            with tempfile.NamedTemporaryFile("w", suffix=".v") as fh:
                fh.write(print_design(d))
                fh.flush()
                cmd = args.predicate_cmd.format(input=fh.name)
                proc = subprocess.run(cmd, shell=True,
                                      stdout=subprocess.DEVNULL,
                                      stderr=subprocess.DEVNULL)
                return proc.returncode == 0
    else:
        _err("reduce needs --mock-fault or --predicate-cmd")
        return EXIT_USAGE
    reduced = reduce(design, predicate)
    Path(args.out).write_text(print_design(reduced))
    print(f"reduced {design_statement_count(design)} -> "
          f"{design_statement_count(reduced)} statements, {args.out}")
    return EXIT_OK


def cmd_replay(args):
    summary, reproduced = replay_report(args.report_dir)
    print(summary)
    print("reproduced" if reproduced else "NOT reproduced")
    return EXIT_OK if reproduced else EXIT_BUGS


def cmd_report(args):
    root = Path(args.dir) / "reports"
    if not root.exists():
        print("no reports")
        return EXIT_OK
    if args.id:
        report = load_report(root / args.id)
        print(f"{report.ident} [{report.classification}] tool={report.tool}")
        print(f"seed: {report.seed_id}")
        print(f"verdict: {report.verdict_summary}")
        print(f"signature: {report.signature_digest}")
        print(f"replay: {report.replay_command}")
        return EXIT_OK
    for rdir in sorted(root.glob("bug_*")):
        report = load_report(rdir)
        print(f"{report.ident} [{report.classification}] tool={report.tool} "
              f"sig={report.signature_digest} {report.verdict_summary}")
    return EXIT_OK


def cmd_campaign(args):
    cfg = load_config(args.config) if args.config else CampaignConfig()
    overrides = {}
    for key in ("oracle", "out_dir", "seed_mode", "n_pool", "k", "max_iter",
                "master_seed", "workers", "stimulus_cycles"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if overrides:
        cfg = replace(cfg, **overrides)
    stats = run_campaign(cfg)
    print(f"iterations={stats.iterations} evaluated={stats.variants_evaluated} "
          f"bugs={stats.bugs_reported} signatures={stats.distinct_signatures}")
    return EXIT_BUGS if stats.bugs_reported else EXIT_OK


# --------------------------------------------------------------------------

def build_parser():
    p = _ArgParser(prog="hdlfuzz",
                   description="metamorphic fuzzing toolkit for HDL "
                               "logic-synthesis flows")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="generate a random seed design")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--config")
    g.add_argument("--out", required=True)
    g.add_argument("--stimulus-out")
    g.add_argument("--cycles", type=int, default=256)
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("mutate", help="produce one equivalent variant")
    m.add_argument("--design", required=True)
    m.add_argument("--stimulus", required=True)
    m.add_argument("--mode", choices=("profiled", "tautological"),
                   default="profiled")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--wrap", type=float, default=0.25)
    m.add_argument("--max-guards", type=int, default=3)
    m.add_argument("--out-dir", required=True)
    m.set_defaults(func=cmd_mutate)

    s = sub.add_parser("select", help="rank variants by posterior")
    s.add_argument("--seed-design", required=True)
    s.add_argument("--pool", nargs="+", required=True)
    s.add_argument("-k", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_select)

    c = sub.add_parser("check", help="equivalence-check two designs")
    c.add_argument("--mode", choices=("internal", "smt-export", "exhaustive"),
                   default="internal")
    c.add_argument("designs", nargs=2)
    c.add_argument("--stimulus")
    c.add_argument("--unroll", type=int, default=8)
    c.add_argument("--max-bits", type=int, default=12)
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("reduce", help="shrink a bug-triggering design")
    r.add_argument("--design", required=True)
    r.add_argument("--stimulus", required=True)
    r.add_argument("--seed-design",
                   help="baseline for miscompilation differentials")
    r.add_argument("--mock-fault", choices=FAULT_CLASSES)
    r.add_argument("--mock-seed", type=int, default=0)
    r.add_argument("--refs-threshold", type=int, default=12)
    r.add_argument("--predicate-cmd")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reduce)

    rp = sub.add_parser("replay", help="re-run a persisted bug report")
    rp.add_argument("report_dir")
    rp.set_defaults(func=cmd_replay)

    rep = sub.add_parser("report", help="list or show bug reports")
    rep.add_argument("--dir", default="campaign-out")
    rep.add_argument("--id")
    rep.set_defaults(func=cmd_report)

    ca = sub.add_parser("campaign", help="run a fuzzing campaign")
    ca.add_argument("--config")
    ca.add_argument("--oracle", choices=("internal", "cross-tool",
                                         "smt-export", "mock"))
    ca.add_argument("--out-dir", dest="out_dir")
    ca.add_argument("--seed-mode", dest="seed_mode",
                    choices=("per-iteration", "fixed"))
    ca.add_argument("--n-pool", dest="n_pool", type=int)
    ca.add_argument("-k", type=int)
    ca.add_argument("--max-iter", dest="max_iter", type=int)
    ca.add_argument("--master-seed", dest="master_seed", type=int)
    ca.add_argument("--workers", type=int)
    ca.add_argument("--stimulus-cycles", dest="stimulus_cycles", type=int)
    ca.set_defaults(func=cmd_campaign)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HdlSyntaxError as e:
        _err(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except HdlError as e:
        _err(f"{type(e).__name__}: {e}")
        return EXIT_INTERNAL
    except (OSError, ValueError) as e:
        _err(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
