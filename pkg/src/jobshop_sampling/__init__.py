"""Construction sampling for job-shop scheduling.

Build schedules by sampling dispatching decisions from priority policies,
reshape the decision distributions with a concentration exponent delta, and
search for the delta value that minimizes the expected best-of-N makespan.
"""

from .dispatch import (LEFT_SHIFT, MODES, SEMI_ACTIVE, Schedule, ScheduleState,
                       apply_action, brute_force_optimum, feasible_actions, replay,
                       validate_schedule)
from .errors import (EnumerationCapError, InfeasibleActionError, InstanceFormatError,
                     JobShopError, PolicyTransportError, PolicyValidationError,
                     ProtocolVersionError)
from .instance import GeneratorConfig, Instance
from .io import generate_instance, parse_instance, read_instance_file, write_instance
from .policies import PolicySpec, PriorityVector, build_policy
from .pools import SamplePool, estimate_curve, read_pool, windowed_min_mean, write_pool
from .sampling import (ActionDistribution, SampleBatch, SamplingConfig, delta_transform,
                       greedy_action, rollout, sample_action, sample_solutions)
from .search import DeltaSearchConfig, DeltaSearchResult, search_delta

__version__ = "0.1.0"

__all__ = [
    "ActionDistribution",
    "DeltaSearchConfig",
    "DeltaSearchResult",
    "EnumerationCapError",
    "GeneratorConfig",
    "InfeasibleActionError",
    "Instance",
    "InstanceFormatError",
    "JobShopError",
    "LEFT_SHIFT",
    "MODES",
    "PolicySpec",
    "PolicyTransportError",
    "PolicyValidationError",
    "PriorityVector",
    "ProtocolVersionError",
    "SEMI_ACTIVE",
    "SampleBatch",
    "SamplePool",
    "SamplingConfig",
    "Schedule",
    "ScheduleState",
    "apply_action",
    "brute_force_optimum",
    "build_policy",
    "delta_transform",
    "estimate_curve",
    "feasible_actions",
    "generate_instance",
    "greedy_action",
    "parse_instance",
    "read_instance_file",
    "read_pool",
    "replay",
    "rollout",
    "sample_action",
    "sample_solutions",
    "search_delta",
    "validate_schedule",
    "windowed_min_mean",
    "write_instance",
    "write_pool",
]
