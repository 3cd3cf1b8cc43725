"""Priority policies: rule-based built-ins and the external-process bridge.

A policy maps a dispatch state to a nonnegative priority per job.  Signed
scores (shortest processing time, most work remaining) are passed through a
softmax so the downstream power transform always sees nonnegative values.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp

from .dispatch import ScheduleState, feasible_actions
from .instance import Instance

POLICY_KINDS = ("uniform", "spt_softmax", "mwkr_softmax", "external")


@dataclass
class PriorityVector:
    """Nonnegative per-job scores restricted to the feasibility mask."""

    values: list[float]
    mask: list[bool]

    def validate(self) -> None:
        if len(self.values) != len(self.mask):
            raise ValueError("values and mask must have the same length")
        positive = False
        for value, feasible in zip(self.values, self.mask):
            if not feasible and value != 0.0:
                raise ValueError("masked-out entries must be exactly zero")
            if feasible:
                if not (value >= 0.0):  # catches NaN
                    raise ValueError(f"priorities must be nonnegative, got {value}")
                positive = positive or value > 0.0
        if not positive:
            raise ValueError("at least one feasible entry must be strictly positive")


@dataclass
class PolicySpec:
    """Declarative policy selection, safe to pickle across worker processes."""

    kind: str = "uniform"
    temperature: float = 1.0
    endpoint: str | None = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.kind == "external" and not self.endpoint:
            raise ValueError("external policies need an endpoint")

    @property
    def policy_id(self) -> str:
        if self.kind == "external":
            return f"external({self.endpoint})"
        if self.kind == "uniform":
            return "uniform"
        return f"{self.kind}(T={self.temperature:g})"


class Policy:
    """Evaluates priorities for one instance; built-ins are stateless."""

    def priority_values(self, state: ScheduleState) -> PriorityVector:
        raise NotImplementedError

    def close(self) -> None:
        """Release any session resources; idempotent."""


class UniformPolicy(Policy):
    def priority_values(self, state: ScheduleState) -> PriorityVector:
        mask = feasible_actions(state)
        feasible = sum(mask)
        share = 1.0 / feasible
        return PriorityVector(values=[share if m else 0.0 for m in mask], mask=mask)


class _SoftmaxPolicy(Policy):
    def __init__(self, temperature: float):
        self.temperature = temperature

    def scores(self, state: ScheduleState, mask: list[bool]) -> list[float]:
        raise NotImplementedError

    def priority_values(self, state: ScheduleState) -> PriorityVector:
        mask = feasible_actions(state)
        scores = self.scores(state, mask)
        temperature = self.temperature
        best = max(score for score, m in zip(scores, mask) if m)
        values = [0.0] * len(mask)
        total = 0.0
        for j, feasible in enumerate(mask):
            if feasible:
                weight = exp((scores[j] - best) / temperature)
                values[j] = weight
                total += weight
        for j, feasible in enumerate(mask):
            if feasible:
                values[j] /= total
        return PriorityVector(values=values, mask=mask)


class SptSoftmaxPolicy(_SoftmaxPolicy):
    """Softmax over negated next-operation durations (shortest first)."""

    def scores(self, state: ScheduleState, mask: list[bool]) -> list[float]:
        instance = state.instance
        return [-float(instance.proc_time[j][state.next_op[j]]) if mask[j] else 0.0
                for j in range(instance.num_jobs)]


class MwkrSoftmaxPolicy(_SoftmaxPolicy):
    """Softmax over remaining processing time (most work remaining first)."""

    def scores(self, state: ScheduleState, mask: list[bool]) -> list[float]:
        instance = state.instance
        return [float(instance.remaining_work(j, state.next_op[j])) if mask[j] else 0.0
                for j in range(instance.num_jobs)]


def build_policy(spec: PolicySpec, instance: Instance) -> Policy:
    """Instantiate a policy for one instance.

    External policies open a protocol session bound to the instance; callers
    own the returned object and must ``close()`` it (built-ins make this a
    no-op).
    """
    if spec.kind == "uniform":
        return UniformPolicy()
    if spec.kind == "spt_softmax":
        return SptSoftmaxPolicy(spec.temperature)
    if spec.kind == "mwkr_softmax":
        return MwkrSoftmaxPolicy(spec.temperature)
    from .protocol import ExternalPolicy

    return ExternalPolicy(spec.endpoint, instance)


def priorities(policy: PolicySpec | Policy, state: ScheduleState) -> PriorityVector:
    """One-shot priority evaluation.

    Accepts either a live ``Policy`` or a ``PolicySpec``; for an external
    spec this opens and closes a session per call, so rollouts should use
    ``build_policy`` instead.
    """
    if isinstance(policy, Policy):
        return policy.priority_values(state)
    live = build_policy(policy, state.instance)
    try:
        return live.priority_values(state)
    finally:
        live.close()
