"""Diversity selection: structural distance, timing priors, posteriors.

Candidates are scored by how far their (v, c, s) metric triple sits from the
seed's (Euclidean distance) and by their critical-path depth. The
pool-normalized distance acts as the likelihood, the normalized timing
complexity as the prior, and variants are ranked by the resulting posterior.
"""

import math
from dataclasses import dataclass

from .metrics import Metrics


@dataclass(frozen=True)
class VariantRecord:
    ident: str
    metrics: Metrics
    timing: int


@dataclass(frozen=True)
class VariantPool:
    seed_metrics: Metrics
    seed_timing: int
    records: tuple  # of VariantRecord
    k: int

    def check(self):
        if not self.records:
            raise ValueError("pool is empty")
        if not 0 < self.k <= len(self.records):
            raise ValueError(f"k={self.k} out of range for pool of "
                             f"{len(self.records)}")


@dataclass(frozen=True)
class Posterior:
    idents: tuple
    distances: tuple
    likelihoods: tuple
    priors: tuple
    posteriors: tuple


def program_distance(a: Metrics, b: Metrics) -> float:
    return math.sqrt((a.v - b.v) ** 2 + (a.c - b.c) ** 2 + (a.s - b.s) ** 2)


def prior(timing, pool_timings) -> float:
    if not pool_timings:
        raise ValueError("pool timings empty")
    if any(t < 0 for t in pool_timings):
        raise ValueError("timings must be nonnegative")
    total = sum(pool_timings)
    if total == 0:
        return 1.0 / len(pool_timings)
    return timing / total


def posterior_from(likelihoods, priors) -> tuple:
    """Normalized posterior for explicit likelihood/prior vectors."""
    weighted = [l * p for l, p in zip(likelihoods, priors)]
    total = sum(weighted)
    n = len(weighted)
    if total == 0:
        return tuple(1.0 / n for _ in weighted)
    return tuple(w / total for w in weighted)


def posterior(pool: VariantPool) -> Posterior:
    pool.check()
    dists = [program_distance(pool.seed_metrics, r.metrics)
             for r in pool.records]
    dist_total = sum(dists)
    if dist_total == 0:
        likelihoods = [1.0 / len(dists)] * len(dists)
    else:
        likelihoods = [d / dist_total for d in dists]
    timings = [r.timing for r in pool.records]
    priors = [prior(t, timings) for t in timings]
    posts = posterior_from(likelihoods, priors)
    return Posterior(tuple(r.ident for r in pool.records), tuple(dists),
                     tuple(likelihoods), tuple(priors), posts)


def select_top_k(pool: VariantPool) -> list:
    """The k identifiers with the largest posterior.

    Ties break toward larger distance, then smaller identifier, so the
    selection is deterministic.
    """
    post = posterior(pool)
    order = sorted(
        range(len(post.idents)),
        key=lambda i: (-post.posteriors[i], -post.distances[i], post.idents[i]))
    return [post.idents[i] for i in order[:pool.k]]


def dump_posterior(post: Posterior, timings=None) -> str:
    """One audit line per variant: id distance timing likelihood prior posterior."""
    lines = []
    for i, ident in enumerate(post.idents):
        timing = "-" if timings is None else f"{timings[i]}"
        lines.append(
            f"{ident} {post.distances[i]:.12g} {timing} "
            f"{post.likelihoods[i]:.12g} {post.priors[i]:.12g} "
            f"{post.posteriors[i]:.12g}")
    return "\n".join(lines) + "\n"
