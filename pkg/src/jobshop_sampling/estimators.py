"""Scikit-learn style estimators wrapping the sampling engine.

``ScheduleSampler`` treats best-of-N construction sampling as a predictor:
``predict`` maps instances to their best sampled makespan.  ``DeltaTuner``
treats the delta search as model fitting: ``fit`` on validation instances
selects ``best_delta_``, ``predict`` then samples held-out instances at the
tuned value.  Both follow the usual conventions: constructor stores
hyperparameters verbatim, ``get_params``/``set_params``/``clone`` work, and
predicting before fitting raises ``NotFittedError``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .dispatch import SEMI_ACTIVE
from .instance import Instance
from .policies import POLICY_KINDS, PolicySpec
from .rng import derive_seed
from .sampling import STRATEGIES, SampleBatch, SamplingConfig, sample_solutions
from .search import (BOTH_SIDES, DEFAULT_CANDIDATES, DeltaSearchConfig,
                     DeltaSearchResult, search_delta)


def _validated_instances(X) -> list[Instance]:
    instances = list(X)
    if not instances:
        raise ValueError("at least one instance is required")
    for position, instance in enumerate(instances):
        if not isinstance(instance, Instance):
            raise TypeError(f"X[{position}] is {type(instance).__name__}, expected Instance")
    return instances


class ScheduleSampler(BaseEstimator):
    """Best-of-N construction sampling as a scikit-learn predictor.

    ``predict(X)`` returns the best sampled makespan per instance; the pool
    for instance i uses the seed derived from (master_seed, i), so results
    are reproducible and independent of parallelism.
    """

    def __init__(self, policy: str = "mwkr_softmax", temperature: float = 1.0,
                 endpoint: str | None = None, strategy: str = "delta", delta: float = 1.0,
                 num_samples: int = 32, mode: str = SEMI_ACTIVE, master_seed: int = 0,
                 parallelism: int = 1):
        self.policy = policy
        self.temperature = temperature
        self.endpoint = endpoint
        self.strategy = strategy
        self.delta = delta
        self.num_samples = num_samples
        self.mode = mode
        self.master_seed = master_seed
        self.parallelism = parallelism

    def _config(self, master_seed: int) -> SamplingConfig:
        if self.policy not in POLICY_KINDS:
            raise ValueError(f"policy must be one of {POLICY_KINDS}, got {self.policy!r}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        return SamplingConfig(
            policy=PolicySpec(kind=self.policy, temperature=self.temperature,
                              endpoint=self.endpoint),
            strategy=self.strategy,
            delta=self.delta,
            num_samples=self.num_samples,
            mode=self.mode,
            master_seed=master_seed,
            parallelism=self.parallelism,
        )

    def fit(self, X, y=None):
        """Validate hyperparameters against the instances; nothing is learned."""
        instances = _validated_instances(X)
        self._config(self.master_seed)
        self.n_instances_ = len(instances)
        return self

    def sample(self, instance: Instance) -> SampleBatch:
        check_is_fitted(self)
        return sample_solutions(instance, self._config(self.master_seed))

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self)
        instances = _validated_instances(X)
        best = []
        for index, instance in enumerate(instances):
            config = self._config(derive_seed(self.master_seed, index))
            best.append(sample_solutions(instance, config).best_makespan)
        return np.asarray(best, dtype=np.int64)

    def score(self, X, y=None) -> float:
        """Negative mean best makespan (greater is better)."""
        return -float(np.mean(self.predict(X)))


class DeltaTuner(BaseEstimator):
    """Delta search as model fitting: ``fit`` selects ``best_delta_``."""

    def __init__(self, policy: str = "mwkr_softmax", temperature: float = 1.0,
                 endpoint: str | None = None, sample_size: int = 32,
                 initial_candidates: tuple[float, ...] = DEFAULT_CANDIDATES,
                 max_iterations: int = 3, min_spacing: float = 0.01,
                 mode: str = SEMI_ACTIVE, master_seed: int = 0, parallelism: int = 1,
                 midpoint_rule: str = BOTH_SIDES):
        self.policy = policy
        self.temperature = temperature
        self.endpoint = endpoint
        self.sample_size = sample_size
        self.initial_candidates = initial_candidates
        self.max_iterations = max_iterations
        self.min_spacing = min_spacing
        self.mode = mode
        self.master_seed = master_seed
        self.parallelism = parallelism
        self.midpoint_rule = midpoint_rule

    def _spec(self) -> PolicySpec:
        if self.policy not in POLICY_KINDS:
            raise ValueError(f"policy must be one of {POLICY_KINDS}, got {self.policy!r}")
        return PolicySpec(kind=self.policy, temperature=self.temperature,
                          endpoint=self.endpoint)

    def fit(self, X, y=None):
        """Search delta on the validation instances ``X``."""
        instances = _validated_instances(X)
        config = DeltaSearchConfig(
            validation_instances=instances,
            sample_size=self.sample_size,
            initial_candidates=tuple(self.initial_candidates),
            max_iterations=self.max_iterations,
            min_spacing=self.min_spacing,
            master_seed=self.master_seed,
            mode=self.mode,
            parallelism=self.parallelism,
            midpoint_rule=self.midpoint_rule,
        )
        result: DeltaSearchResult = search_delta(self._spec(), config)
        self.best_delta_ = result.best_delta
        self.best_score_ = result.best_score
        self.search_result_ = result
        return self

    def predict(self, X) -> np.ndarray:
        """Best-of-N makespans on ``X`` at the tuned delta."""
        check_is_fitted(self)
        sampler = ScheduleSampler(policy=self.policy, temperature=self.temperature,
                                  endpoint=self.endpoint, strategy="delta",
                                  delta=self.best_delta_, num_samples=self.sample_size,
                                  mode=self.mode, master_seed=self.master_seed,
                                  parallelism=self.parallelism)
        return sampler.fit(X).predict(X)

    def score(self, X, y=None) -> float:
        """Negative mean best makespan at the tuned delta (greater is better)."""
        return -float(np.mean(self.predict(X)))
