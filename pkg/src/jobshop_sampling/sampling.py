"""Construction sampling: turn a priority policy into solution pools.

A rollout builds one complete schedule by repeatedly asking the policy for
priorities over the feasible jobs, reshaping that distribution with the
concentration exponent delta

    q_i = p_i ** delta / sum_k p_k ** delta

and drawing the next job from q.  delta = 1 samples the policy as-is,
delta < 1 flattens it toward uniform, delta > 1 sharpens it toward the
argmax; the limits delta = 0 (uniform over the support) and delta = inf
(argmax, lowest index on ties) are handled exactly.  The transform runs in
log space so extreme exponents cannot overflow.

``sample_solutions`` runs many rollouts.  Rollout i always uses the seed
derived from (master seed, i), so the pool is one deterministic function of
the configuration: worker count and chunking cannot change any result.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .dispatch import MODES, SEMI_ACTIVE, Schedule, ScheduleState, _apply_inplace
from .instance import Instance
from .policies import Policy, PolicySpec, PriorityVector, build_policy
from .rng import RandomStream, derive_seed

logger = logging.getLogger(__name__)

DELTA = "delta"
UNIFORM_RANDOM = "uniform_random"
GREEDY = "greedy"
STRATEGIES = (DELTA, UNIFORM_RANDOM, GREEDY)


class ActionDistribution:
    """Probabilities over jobs; zero outside the feasible support."""

    __slots__ = ("probabilities", "support")

    def __init__(self, probabilities: list[float], support: list[bool]):
        self.probabilities = probabilities
        self.support = support

    @classmethod
    def from_priorities(cls, vector: PriorityVector) -> "ActionDistribution":
        total = 0.0
        for value, feasible in zip(vector.values, vector.mask):
            if feasible:
                total += value
        if not total > 0.0:
            raise ValueError("priority values sum to zero over the feasible support")
        probabilities = [
            value / total if feasible else 0.0
            for value, feasible in zip(vector.values, vector.mask)
        ]
        return cls(probabilities, list(vector.mask))


def delta_transform(distribution: ActionDistribution, delta: float) -> ActionDistribution:
    """Concentrate or flatten a distribution by the exponent ``delta``.

    delta = 0 is exactly uniform over the support, delta = inf puts all mass
    on the argmax (lowest index on ties), delta = 1 is the identity.  The
    general case exponentiates in log space and skips zero entries, so no
    overflow or log-of-zero can occur.
    """
    if math.isnan(delta) or delta < 0.0:
        raise ValueError(f"delta must be >= 0, got {delta!r}")
    probs = distribution.probabilities
    support = distribution.support
    if delta == 1.0:
        return ActionDistribution(probs[:], support[:])
    if delta == 0.0:
        size = sum(1 for feasible, p in zip(support, probs) if feasible and p > 0.0)
        share = 1.0 / size
        uniform = [share if feasible and p > 0.0 else 0.0
                   for feasible, p in zip(support, probs)]
        return ActionDistribution(uniform, support[:])
    if math.isinf(delta):
        peaked = [0.0] * len(probs)
        peaked[greedy_action(distribution)] = 1.0
        return ActionDistribution(peaked, support[:])

    log = math.log
    exp = math.exp
    scaled_logs = [delta * log(p) if p > 0.0 else None for p in probs]
    highest = max(value for value in scaled_logs if value is not None)
    weights = [exp(value - highest) if value is not None else 0.0 for value in scaled_logs]
    total = sum(weights)
    return ActionDistribution([w / total for w in weights], support[:])


def sample_action(distribution: ActionDistribution, u: float) -> int:
    """Inverse-CDF draw: the job whose cumulative bracket contains ``u``."""
    cumulative = 0.0
    last_positive = -1
    for job, p in enumerate(distribution.probabilities):
        if p > 0.0:
            cumulative += p
            last_positive = job
            if u < cumulative:
                return job
    if last_positive < 0:
        raise ValueError("distribution has an empty support")
    return last_positive


def greedy_action(distribution: ActionDistribution) -> int:
    """Index of the largest probability; ties go to the lowest index."""
    best_job = -1
    best_p = -1.0
    for job, p in enumerate(distribution.probabilities):
        if p > best_p:
            best_p = p
            best_job = job
    if best_job < 0 or not best_p > 0.0:
        raise ValueError("distribution has an empty support")
    return best_job


def _construct(instance: Instance, policy: Policy, strategy: str, delta: float,
               stream: RandomStream, mode: str) -> ScheduleState:
    """One full construction; exactly one random draw per step unless greedy."""
    state = ScheduleState(instance)
    num_machines = instance.num_machines
    total_ops = instance.num_jobs * num_machines

    if strategy == UNIFORM_RANDOM:
        for _ in range(total_ops):
            feasible = [job for job, count in enumerate(state.next_op) if count < num_machines]
            job = feasible[stream.randrange(len(feasible))]
            _apply_inplace(state, job, mode)
        return state

    if strategy == GREEDY:
        for _ in range(total_ops):
            dist = ActionDistribution.from_priorities(policy.priority_values(state))
            _apply_inplace(state, greedy_action(dist), mode)
        return state

    if strategy != DELTA:
        raise ValueError(f"unknown strategy {strategy!r}")
    for _ in range(total_ops):
        dist = ActionDistribution.from_priorities(policy.priority_values(state))
        dist = delta_transform(dist, delta)
        _apply_inplace(state, sample_action(dist, stream.random()), mode)
    return state


def rollout(instance: Instance, policy: Policy, strategy: str = DELTA,
            delta: float = 1.0, seed: int = 0, mode: str = SEMI_ACTIVE) -> Schedule:
    """Build one complete schedule with the given strategy and seed."""
    stream = RandomStream(seed)
    state = _construct(instance, policy, strategy, delta, stream, mode)
    return state.to_schedule()


@dataclass
class SamplingConfig:
    """Everything that determines a sample pool, except worker count.

    ``parallelism`` only splits the work; rollout i is seeded from
    (master_seed, i) either way, so it never changes results.
    """

    policy: PolicySpec = field(default_factory=PolicySpec)
    strategy: str = DELTA
    delta: float = 1.0
    num_samples: int = 1
    mode: str = SEMI_ACTIVE
    master_seed: int = 0
    parallelism: int = 1

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if math.isnan(self.delta) or self.delta < 0.0:
            raise ValueError(f"delta must be >= 0, got {self.delta!r}")
        if self.num_samples < 1:
            raise ValueError(f"num_samples must be >= 1, got {self.num_samples}")
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {self.parallelism}")

    def provenance(self, instance_id: str) -> dict:
        """Reproduction recipe for a pool; deliberately excludes parallelism."""
        return {
            "instance": instance_id,
            "policy": self.policy.policy_id,
            "strategy": self.strategy,
            "delta": self.delta,
            "mode": self.mode,
            "master_seed": self.master_seed,
            "num_samples": self.num_samples,
        }


@dataclass(frozen=True)
class SampleBatch:
    """Makespans of one pool, ordered by rollout index."""

    instance_id: str
    makespans: tuple[int, ...]
    best_index: int
    best_schedule: Schedule

    @property
    def best_makespan(self) -> int:
        return self.makespans[self.best_index]


def _chunk_makespans(instance: Instance, spec: PolicySpec, strategy: str, delta: float,
                     mode: str, master_seed: int, start: int, count: int) -> list[int]:
    policy = build_policy(spec, instance)
    try:
        makespans = []
        for index in range(start, start + count):
            stream = RandomStream(derive_seed(master_seed, index))
            state = _construct(instance, policy, strategy, delta, stream, mode)
            makespans.append(state.makespan())
        return makespans
    finally:
        policy.close()


def sample_solutions(instance: Instance, config: SamplingConfig) -> SampleBatch:
    """Run ``config.num_samples`` independent rollouts and keep the best.

    The greedy strategy is deterministic, so its pool size is clamped to one
    rollout (with a warning) instead of repeating identical work.
    """
    num_samples = config.num_samples
    if config.strategy == GREEDY and num_samples > 1:
        logger.warning("greedy sampling is deterministic; clamping num_samples "
                       "from %d to 1", num_samples)
        num_samples = 1

    if config.parallelism == 1 or num_samples < 2 * config.parallelism:
        makespans = _chunk_makespans(instance, config.policy, config.strategy, config.delta,
                                     config.mode, config.master_seed, 0, num_samples)
    else:
        bounds = [(num_samples * worker) // config.parallelism
                  for worker in range(config.parallelism + 1)]
        chunks = [(instance, config.policy, config.strategy, config.delta, config.mode,
                   config.master_seed, bounds[w], bounds[w + 1] - bounds[w])
                  for w in range(config.parallelism) if bounds[w + 1] > bounds[w]]
        makespans = []
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            for chunk in pool.map(_chunk_makespans_star, chunks):
                makespans.extend(chunk)

    best_index = makespans.index(min(makespans))
    policy = build_policy(config.policy, instance)
    try:
        best_stream = RandomStream(derive_seed(config.master_seed, best_index))
        best_state = _construct(instance, policy, config.strategy, config.delta,
                                best_stream, config.mode)
    finally:
        policy.close()
    return SampleBatch(instance_id=instance.id, makespans=tuple(makespans),
                       best_index=best_index, best_schedule=best_state.to_schedule())


def _chunk_makespans_star(args) -> list[int]:
    return _chunk_makespans(*args)
