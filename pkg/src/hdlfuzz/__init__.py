"""Metamorphic fuzzing toolkit for HDL logic-synthesis toolchains.

Pipeline: generate random synthesizable designs, derive semantics-preserving
variants (always-true guards, dead-code injection, submodule wrapping), rank
them with a distance/timing posterior, check equivalence (internal simulator,
cross-tool traces, or bounded SMT miters), and triage failures (reduction,
dedup, structured reports).
"""

from .ast import Design, ModuleDef, check_design
from .errors import HdlError
from .generate import GenConfig, Stimulus, generate_seed, generate_stimulus
from .metrics import Metrics, structural_metrics
from .mutate import MutationConfig, Variant, mutate
from .parser import parse_design
from .printer import print_design
from .select import VariantPool, posterior, program_distance, select_top_k
from .simulate import Trace, compare_traces, profile, simulate
from .campaign import CampaignConfig, CampaignStats, run_campaign

__all__ = [
    "CampaignConfig", "CampaignStats", "Design", "GenConfig", "HdlError",
    "Metrics", "ModuleDef", "MutationConfig", "Stimulus", "Trace", "Variant",
    "check_design", "compare_traces", "generate_seed", "generate_stimulus",
    "mutate", "parse_design", "posterior", "print_design", "profile",
    "program_distance", "run_campaign", "select_top_k", "simulate",
    "structural_metrics",
]

__version__ = "0.1.0"
