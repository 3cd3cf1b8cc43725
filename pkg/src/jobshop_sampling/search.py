"""Iterative grid refinement for the concentration exponent delta.

Start from a coarse candidate grid, score every candidate by the mean
best-of-N makespan over a set of validation instances, then repeatedly
densify the grid around the two best-scoring candidates: insert the
midpoint between each of them and its adjacent candidates (rounded to two
decimals), and when a best candidate sits on the boundary of the grid,
extend the grid past it by half the largest gap between adjacent
candidates (never below zero).  Scores are cached by exact delta value, so
a candidate is never evaluated twice and earlier comparisons can never be
flipped by re-sampling noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .dispatch import MODES, SEMI_ACTIVE
from .instance import Instance
from .policies import PolicySpec
from .pools import write_text_atomic
from .rng import derive_seed, float_bits
from .sampling import SamplingConfig, sample_solutions

DEFAULT_CANDIDATES = (0.05, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)

BOTH_SIDES = "both_sides"
BETWEEN_BEST = "between_best"
MIDPOINT_RULES = (BOTH_SIDES, BETWEEN_BEST)


@dataclass
class DeltaSearchConfig:
    """Search space, validation set, and termination rules."""

    validation_instances: list[Instance]
    sample_size: int
    initial_candidates: tuple[float, ...] = DEFAULT_CANDIDATES
    max_iterations: int = 3
    min_spacing: float = 0.01
    master_seed: int = 0
    mode: str = SEMI_ACTIVE
    parallelism: int = 1
    midpoint_rule: str = BOTH_SIDES

    def __post_init__(self):
        self.initial_candidates = tuple(float(c) for c in self.initial_candidates)
        if len(self.initial_candidates) < 3:
            raise ValueError("at least 3 initial candidates are required")
        for previous, current in zip(self.initial_candidates, self.initial_candidates[1:]):
            if current <= previous:
                raise ValueError("initial candidates must be strictly ascending")
        if self.initial_candidates[0] < 0.0:
            raise ValueError("candidates must be >= 0")
        if not self.validation_instances:
            raise ValueError("at least one validation instance is required")
        if self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.min_spacing < 0.01:
            raise ValueError("min_spacing must be >= 0.01 (two-decimal candidate grid)")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.midpoint_rule not in MIDPOINT_RULES:
            raise ValueError(f"midpoint_rule must be one of {MIDPOINT_RULES}")


@dataclass(frozen=True)
class Evaluation:
    delta: float
    score: float
    iteration: int


@dataclass(frozen=True)
class IterationTrace:
    iteration: int
    evaluated: tuple[float, ...]
    scores: tuple[float, ...]
    incumbent_delta: float
    incumbent_score: float


@dataclass
class DeltaSearchResult:
    evaluations: list[Evaluation] = field(default_factory=list)
    trace: list[IterationTrace] = field(default_factory=list)
    best_delta: float = math.nan
    best_score: float = math.nan


def evaluate_candidate(delta: float, policy: PolicySpec, config: DeltaSearchConfig) -> float:
    """Mean best-of-N makespan of ``delta`` across the validation instances.

    Each (delta, instance) pair gets its own derived master seed, so every
    candidate sees the same instances but statistically independent pools,
    and re-evaluation is bit-reproducible.
    """
    total = 0.0
    for index, instance in enumerate(config.validation_instances):
        batch = sample_solutions(instance, SamplingConfig(
            policy=policy,
            strategy="delta",
            delta=delta,
            num_samples=config.sample_size,
            mode=config.mode,
            master_seed=derive_seed(config.master_seed, float_bits(delta), index),
            parallelism=config.parallelism,
        ))
        total += batch.best_makespan
    return total / len(config.validation_instances)


def _two_most_promising(scores: dict[float, float]) -> list[float]:
    return sorted(scores, key=lambda delta: (scores[delta], delta))[:2]


def refine_candidates(scores: dict[float, float],
                      midpoint_rule: str = BOTH_SIDES) -> list[float]:
    """New candidates to evaluate, given every scored candidate so far.

    Midpoints are taken between each of the two best candidates and its
    adjacent candidates (or, under the alternative rule, only between the
    two best candidates themselves), rounded to two decimals.  A best
    candidate on the grid boundary extends the grid beyond itself by half
    the largest adjacent gap, clamped at zero, so the search can escape an
    initial range that missed the minimum.
    """
    if len(scores) < 3:
        raise ValueError("refinement needs at least 3 scored candidates")
    candidates = sorted(scores)
    best_two = _two_most_promising(scores)
    additions = set()

    if midpoint_rule == BETWEEN_BEST:
        additions.add(round((best_two[0] + best_two[1]) / 2.0, 2))
    else:
        for delta in best_two:
            position = candidates.index(delta)
            if position > 0:
                additions.add(round((delta + candidates[position - 1]) / 2.0, 2))
            if position + 1 < len(candidates):
                additions.add(round((delta + candidates[position + 1]) / 2.0, 2))

    half_largest_gap = max(b - a for a, b in zip(candidates, candidates[1:])) / 2.0
    if min(best_two) == candidates[0]:
        additions.add(max(0.0, round(candidates[0] - half_largest_gap, 2)))
    if max(best_two) == candidates[-1]:
        additions.add(round(candidates[-1] + half_largest_gap, 2))

    return sorted(delta for delta in additions if delta not in scores)


def _gaps_all_below_spacing(scores: dict[float, float], min_spacing: float) -> bool:
    candidates = sorted(scores)
    for delta in _two_most_promising(scores):
        position = candidates.index(delta)
        if position > 0 and delta - candidates[position - 1] >= min_spacing:
            return False
        if position + 1 < len(candidates) and candidates[position + 1] - delta >= min_spacing:
            return False
    return True


def search_delta(policy: PolicySpec, config: DeltaSearchConfig,
                 evaluate=None) -> DeltaSearchResult:
    """Run the refinement loop; ``evaluate`` is injectable for testing.

    Iteration 0 scores the initial grid; each later iteration scores only
    the newly added candidates.  The loop stops at max_iterations, when
    both best candidates are within min_spacing of all their neighbors, or
    when refinement adds nothing new.
    """
    if evaluate is None:
        evaluate = lambda delta: evaluate_candidate(delta, policy, config)  # noqa: E731
    result = DeltaSearchResult()
    scores: dict[float, float] = {}

    def run_iteration(iteration: int, batch: list[float]):
        for delta in batch:
            score = evaluate(delta)
            scores[delta] = score
            result.evaluations.append(Evaluation(delta=delta, score=score,
                                                 iteration=iteration))
        incumbent = min(scores, key=lambda d: (scores[d], d))
        result.trace.append(IterationTrace(
            iteration=iteration,
            evaluated=tuple(batch),
            scores=tuple(scores[delta] for delta in batch),
            incumbent_delta=incumbent,
            incumbent_score=scores[incumbent],
        ))

    run_iteration(0, list(config.initial_candidates))
    for iteration in range(1, config.max_iterations):
        if _gaps_all_below_spacing(scores, config.min_spacing):
            break
        additions = refine_candidates(scores, config.midpoint_rule)
        if not additions:
            break
        run_iteration(iteration, additions)

    result.best_delta = min(scores, key=lambda d: (scores[d], d))
    result.best_score = scores[result.best_delta]
    return result


def write_search_trace(result: DeltaSearchResult, path) -> None:
    """Persist the full search trace as JSON."""
    payload = {
        "best_delta": result.best_delta,
        "best_score": result.best_score,
        "iterations": [
            {
                "iteration": entry.iteration,
                "evaluated": list(entry.evaluated),
                "scores": list(entry.scores),
                "incumbent_delta": entry.incumbent_delta,
                "incumbent_score": entry.incumbent_score,
            }
            for entry in result.trace
        ],
        "evaluations": [
            {"delta": ev.delta, "score": ev.score, "iteration": ev.iteration}
            for ev in result.evaluations
        ],
    }
    write_text_atomic(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_search_curve(result: DeltaSearchResult, path) -> None:
    """CSV of (delta, score) pairs in ascending delta order, for plotting."""
    lines = ["delta,mean_best_makespan"]
    for evaluation in sorted(result.evaluations, key=lambda ev: ev.delta):
        lines.append(f"{evaluation.delta:g},{evaluation.score:g}")
    write_text_atomic(path, "\n".join(lines) + "\n")
