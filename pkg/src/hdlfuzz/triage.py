"""Bug triage: AST-level reduction, failure signatures, dedup, reports.

Reduction deletes AST regions (contiguous statement chunks by bisection,
then single statements, module items, and whole unreferenced modules) to a
fixpoint, so the result is 1-minimal at region granularity: no single
deletable region can be removed while keeping the predicate true. Every
candidate is validated before the predicate sees it, so the reducer never
leaves the supported subset.
"""

import hashlib
import re
import time
from dataclasses import dataclass
from pathlib import Path

from .ast import (
    Design, Instance, ModuleDef, check_design, get_stmt_list,
    iter_stmt_lists, with_module, with_stmt_list,
)
from .errors import DesignError, FlakyPredicateError, HdlError

# --------------------------------------------------------------------------
# Reduction
# --------------------------------------------------------------------------


def _safe_predicate(predicate):
    def run(design):
        try:
            check_design(design)
            return bool(predicate(design))
        except HdlError:
            return False
    return run


def _try_list_deletions(design, mod_name, path, predicate):
    """Greedy chunk deletion inside one statement list. Returns new design
    or None when nothing in this list can go."""
    changed = None
    while True:
        mod = next(m for m in design.modules if m.name == mod_name)
        try:
            stmts = get_stmt_list(mod, path)
        except (DesignError, IndexError, AttributeError):
            break
        n = len(stmts)
        if n == 0:
            break
        removed = False
        size = n
        while size >= 1:
            start = 0
            while start < len(stmts):
                candidate_list = stmts[:start] + stmts[start + size:]
                if len(candidate_list) == len(stmts):
                    break
                cand = with_module(design,
                                   with_stmt_list(mod, path, candidate_list))
                if predicate(cand):
                    design = cand
                    changed = design
                    mod = next(m for m in design.modules if m.name == mod_name)
                    stmts = candidate_list
                    removed = True
                else:
                    start += size
            size //= 2
        if not removed:
            break
    return changed


def _try_item_deletions(design, predicate):
    changed = None
    progress = True
    while progress:
        progress = False
        for mod in design.modules:
            for idx in range(len(mod.items) - 1, -1, -1):
                items = mod.items[:idx] + mod.items[idx + 1:]
                cand = with_module(design, ModuleDef(mod.name, mod.ports, items))
                if predicate(cand):
                    design = cand
                    changed = design
                    progress = True
                    break
            if progress:
                break
    return changed


def _try_module_deletions(design, predicate):
    changed = None
    progress = True
    while progress:
        progress = False
        instantiated = set()
        for m in design.modules:
            for it in m.items:
                if isinstance(it, Instance):
                    instantiated.add(it.module)
        for m in design.modules:
            if m.name == design.top or m.name in instantiated:
                continue
            cand = Design(tuple(x for x in design.modules if x.name != m.name),
                          design.top)
            if predicate(cand):
                design = cand
                changed = design
                progress = True
                break
    return changed


def reduce(design: Design, predicate) -> Design:
    """Shrink `design` while `predicate` stays true; 1-minimal at region
    granularity (statements, items, unreferenced modules) on return."""
    check = _safe_predicate(predicate)
    if not check(design):
        raise FlakyPredicateError(
            "predicate is false on the design to be reduced")

    current = design
    while True:
        any_change = False
        # statement lists, bisection first
        for mod_name in [m.name for m in current.modules]:
            mod = next((m for m in current.modules if m.name == mod_name), None)
            if mod is None:
                continue
            paths = [path for path, _ in iter_stmt_lists(mod)]
            for path in paths:
                result = _try_list_deletions(current, mod_name, path, check)
                if result is not None:
                    current = result
                    any_change = True
        result = _try_item_deletions(current, check)
        if result is not None:
            current = result
            any_change = True
        result = _try_module_deletions(current, check)
        if result is not None:
            current = result
            any_change = True
        if not any_change:
            break
    return current


def single_deletion_candidates(design: Design):
    """Every design obtainable by deleting one region; the minimality oracle."""
    out = []
    for mod in design.modules:
        for path, stmts in iter_stmt_lists(mod):
            for i in range(len(stmts)):
                new_list = stmts[:i] + stmts[i + 1:]
                out.append(with_module(design,
                                       with_stmt_list(mod, path, new_list)))
        for idx in range(len(mod.items)):
            items = mod.items[:idx] + mod.items[idx + 1:]
            out.append(with_module(design, ModuleDef(mod.name, mod.ports, items)))
    instantiated = set()
    for m in design.modules:
        for it in m.items:
            if isinstance(it, Instance):
                instantiated.add(it.module)
    for m in design.modules:
        if m.name != design.top and m.name not in instantiated:
            out.append(Design(tuple(x for x in design.modules
                                    if x.name != m.name), design.top))
    return out


# --------------------------------------------------------------------------
# Failure signatures and dedup
# --------------------------------------------------------------------------

_HEX_ADDR = re.compile(r"0[xX][0-9a-fA-F]+")
_PATH = re.compile(r"(?:/[\w.+~-]+){2,}")
_LINECOL = re.compile(r":\d+(?::\d+)?\b")
_LINE_WORD = re.compile(r"\b(line|LINE|Line)\s+\d+\b")
_TIMESTAMP = re.compile(
    r"\b\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:\.\d+)?\b|\b\d{2}:\d{2}:\d{2}\b")
_WS = re.compile(r"[ \t]+")


def normalize_failure_text(text: str) -> str:
    text = _TIMESTAMP.sub("<time>", text)
    text = _HEX_ADDR.sub("<addr>", text)
    text = _PATH.sub("<path>", text)
    text = _LINE_WORD.sub(r"\1 <n>", text)
    text = _LINECOL.sub(":<n>", text)
    text = "\n".join(_WS.sub(" ", ln).strip() for ln in text.splitlines())
    return text.strip()


@dataclass(frozen=True)
class FailureSignature:
    kind: str        # "crash" | "mismatch"
    tool: str
    text: str        # normalized
    digest: str

    @staticmethod
    def make(kind, tool, text):
        norm = normalize_failure_text(text)
        digest = hashlib.sha256(
            f"{kind}\x00{tool}\x00{norm}".encode()).hexdigest()[:16]
        return FailureSignature(kind, tool, norm, digest)


def signature(verdict, tool_output_text: str = "") -> FailureSignature:
    """Signature for a Crash or Mismatch oracle verdict.

    Mismatch signatures use (signal, tool pair) and deliberately exclude the
    cycle number: one root cause shows up at stimulus-dependent cycles.
    """
    if verdict.kind == "crash":
        text = tool_output_text or verdict.output_excerpt or "crash"
        return FailureSignature.make("crash", verdict.tool, text)
    if verdict.kind == "mismatch":
        text = f"signal={verdict.signal} tools={verdict.tool}"
        return FailureSignature.make("mismatch", verdict.tool, text)
    raise ValueError(f"no signature for verdict kind {verdict.kind!r}")


class DedupDB:
    """Append-only signature store; single-writer by contract."""

    def __init__(self, path):
        self.path = Path(path)
        self._seen = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                parts = line.split("\t")
                if len(parts) >= 3:
                    self._seen[parts[0]] = parts[2]

    def known(self, sig: FailureSignature) -> bool:
        return sig.digest in self._seen

    def record(self, sig: FailureSignature, report_id: str):
        self._seen[sig.digest] = report_id
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a") as fh:
            fh.write(f"{sig.digest}\t{sig.kind}:{sig.tool}\t{report_id}\n")

    def __len__(self):
        return len(self._seen)


def dedup(sig: FailureSignature, db: DedupDB) -> bool:
    """True when `sig` is new; records it. Subsequent calls return False."""
    if db.known(sig):
        return False
    db.record(sig, "-")
    return True


# --------------------------------------------------------------------------
# Bug reports
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BugReport:
    ident: str
    classification: str      # "C" (crash) | "M" (miscompilation)
    tool: str
    seed_id: str
    design_text: str         # reduced trigger source
    seed_design_text: str    # baseline the differential compares against
    stimulus_text: str
    lineage_text: str
    verdict_summary: str
    signature_digest: str
    signature_text: str
    replay_command: str
    created: str = ""


REPORT_FIELDS = ("ident", "classification", "tool", "seed_id",
                 "verdict_summary", "signature_digest", "replay_command",
                 "created")


def persist_report(report: BugReport, directory) -> Path:
    """Write report.txt + design.v + seed.v + stimulus.txt + lineage.txt."""
    directory = Path(directory)
    rdir = directory / report.ident
    if rdir.exists():
        raise FileExistsError(f"report directory {rdir} already exists")
    rdir.mkdir(parents=True)
    lines = ["# bug report"]
    for name in REPORT_FIELDS:
        lines.append(f"{name}: {getattr(report, name)}")
    lines.append("signature:")
    for ln in report.signature_text.splitlines():
        lines.append("  " + ln)
    (rdir / "report.txt").write_text("\n".join(lines) + "\n")
    (rdir / "design.v").write_text(report.design_text)
    (rdir / "seed.v").write_text(report.seed_design_text)
    (rdir / "stimulus.txt").write_text(report.stimulus_text)
    (rdir / "lineage.txt").write_text(report.lineage_text)
    return rdir


def load_report(directory) -> BugReport:
    rdir = Path(directory)
    fields = {}
    sig_lines = []
    in_sig = False
    for line in (rdir / "report.txt").read_text().splitlines():
        if line.startswith("#"):
            continue
        if line == "signature:":
            in_sig = True
            continue
        if in_sig:
            sig_lines.append(line[2:] if line.startswith("  ") else line)
            continue
        key, _, value = line.partition(": ")
        fields[key] = value
    seed_path = rdir / "seed.v"
    return BugReport(
        ident=fields.get("ident", rdir.name),
        classification=fields.get("classification", "?"),
        tool=fields.get("tool", "?"),
        seed_id=fields.get("seed_id", "?"),
        design_text=(rdir / "design.v").read_text(),
        seed_design_text=seed_path.read_text() if seed_path.exists() else "",
        stimulus_text=(rdir / "stimulus.txt").read_text(),
        lineage_text=(rdir / "lineage.txt").read_text(),
        verdict_summary=fields.get("verdict_summary", ""),
        signature_digest=fields.get("signature_digest", ""),
        signature_text="\n".join(sig_lines),
        replay_command=fields.get("replay_command", ""),
        created=fields.get("created", ""),
    )


def now_stamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S")
