from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from jobshop_sampling.dispatch import LEFT_SHIFT, brute_force_optimum, validate_schedule
from jobshop_sampling.instance import GeneratorConfig, Instance
from jobshop_sampling.io import generate_instance
from jobshop_sampling.policies import PolicySpec, PriorityVector, UniformPolicy
from jobshop_sampling.rng import RandomStream
from jobshop_sampling.sampling import (
    DELTA,
    GREEDY,
    STRATEGIES,
    UNIFORM_RANDOM,
    ActionDistribution,
    SampleBatch,
    SamplingConfig,
    delta_transform,
    greedy_action,
    rollout,
    sample_action,
    sample_solutions,
)

TWO_BY_TWO = Instance(machine_order=((0, 1), (1, 0)), proc_time=((3, 2), (2, 4)),
                      id="two_by_two")


def dist(*probabilities: float) -> ActionDistribution:
    return ActionDistribution(list(probabilities),
                              [p > 0.0 for p in probabilities])


def entropy(distribution: ActionDistribution) -> float:
    return -sum(p * math.log(p) for p in distribution.probabilities if p > 0.0)


positive_vectors = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=12)

# Order assertions need inputs whose logs stay distinguishable after rounding,
# so these values sit on a coarse grid: any two entries are equal or at least
# a factor 1.001 apart.
grid_vectors = st.lists(st.integers(1, 1000).map(lambda n: n / 1000.0),
                        min_size=2, max_size=12)


def test_from_priorities_normalizes_over_the_mask() -> None:
    vector = PriorityVector(values=[2.0, 0.0, 6.0], mask=[True, False, True])
    result = ActionDistribution.from_priorities(vector)
    assert result.probabilities == [0.25, 0.0, 0.75]
    assert result.support == [True, False, True]


def test_from_priorities_rejects_zero_mass() -> None:
    vector = PriorityVector(values=[0.0, 0.0], mask=[True, True])
    with pytest.raises(ValueError):
        ActionDistribution.from_priorities(vector)


def test_transform_known_values() -> None:
    sharpened = delta_transform(dist(0.8, 0.2), 2.0)
    assert sharpened.probabilities[0] == pytest.approx(0.64 / 0.68, abs=1e-9)
    assert sharpened.probabilities[1] == pytest.approx(0.04 / 0.68, abs=1e-9)


def test_transform_leaves_symmetric_vectors_alone() -> None:
    for delta in (0.0, 0.5, 1.0, 3.0, math.inf):
        result = delta_transform(dist(0.5, 0.5), delta)
        if math.isinf(delta):
            assert result.probabilities == [1.0, 0.0]  # argmax tie, lowest index
        else:
            assert result.probabilities == pytest.approx([0.5, 0.5], abs=1e-12)


def test_transform_at_one_is_the_identity() -> None:
    result = delta_transform(dist(0.7, 0.3), 1.0)
    assert result.probabilities == [0.7, 0.3]


def test_transform_at_zero_is_uniform_over_the_support() -> None:
    result = delta_transform(dist(0.6, 0.4, 0.0), 0.0)
    assert result.probabilities == [0.5, 0.5, 0.0]


def test_transform_at_infinity_is_one_hot_with_low_index_ties() -> None:
    assert delta_transform(dist(0.2, 0.5, 0.3), math.inf).probabilities == [0.0, 1.0, 0.0]
    assert delta_transform(dist(0.4, 0.4, 0.2), math.inf).probabilities == [1.0, 0.0, 0.0]


def test_transform_rejects_negative_and_nan_exponents() -> None:
    with pytest.raises(ValueError):
        delta_transform(dist(0.5, 0.5), -0.1)
    with pytest.raises(ValueError):
        delta_transform(dist(0.5, 0.5), math.nan)


def test_transform_survives_extreme_exponents() -> None:
    for delta in (1e4, 1e6):
        result = delta_transform(dist(0.9, 0.1), delta)
        assert all(math.isfinite(p) for p in result.probabilities)
        assert sum(result.probabilities) == pytest.approx(1.0, abs=1e-9)
        assert result.probabilities[0] > 1.0 - 1e-9


@given(values=grid_vectors, delta=st.floats(0.1, 50.0))
def test_transform_preserves_order(values: list[float], delta: float) -> None:
    vector = PriorityVector(values=values, mask=[True] * len(values))
    before = ActionDistribution.from_priorities(vector)
    after = delta_transform(before, delta)
    assert sum(after.probabilities) == pytest.approx(1.0, abs=1e-9)
    for i in range(len(values)):
        for j in range(len(values)):
            if before.probabilities[i] > before.probabilities[j]:
                assert after.probabilities[i] > after.probabilities[j]
            elif before.probabilities[i] == before.probabilities[j]:
                assert after.probabilities[i] == pytest.approx(after.probabilities[j],
                                                               abs=1e-9)


@given(values=positive_vectors, delta1=st.floats(0.2, 5.0), delta2=st.floats(0.2, 5.0))
def test_transform_composes_multiplicatively(values, delta1, delta2) -> None:
    vector = PriorityVector(values=values, mask=[True] * len(values))
    base = ActionDistribution.from_priorities(vector)
    composed = delta_transform(delta_transform(base, delta1), delta2)
    direct = delta_transform(base, delta1 * delta2)
    assert composed.probabilities == pytest.approx(direct.probabilities, abs=1e-9)


@given(values=grid_vectors, scale=st.floats(0.001, 1000.0),
       delta=st.sampled_from([0.0, 0.5, 1.0, 2.0, math.inf]))
def test_transform_ignores_priority_scaling(values, scale, delta) -> None:
    mask = [True] * len(values)
    plain = ActionDistribution.from_priorities(PriorityVector(values=values, mask=mask))
    scaled = ActionDistribution.from_priorities(
        PriorityVector(values=[v * scale for v in values], mask=mask))
    assert (delta_transform(scaled, delta).probabilities
            == pytest.approx(delta_transform(plain, delta).probabilities, abs=1e-9))


@given(values=positive_vectors)
def test_transform_entropy_never_increases_with_delta(values) -> None:
    vector = PriorityVector(values=values, mask=[True] * len(values))
    base = ActionDistribution.from_priorities(vector)
    deltas = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 16.0)
    entropies = [entropy(delta_transform(base, delta)) for delta in deltas]
    for lower, higher in zip(entropies[1:], entropies):
        assert lower <= higher + 1e-9


def test_sample_action_follows_the_cumulative_brackets() -> None:
    assert sample_action(dist(0.0, 1.0, 0.0), 0.3) == 1
    quarter = dist(0.25, 0.75)
    assert sample_action(quarter, 0.0) == 0
    assert sample_action(quarter, 0.2499) == 0
    assert sample_action(quarter, 0.25) == 1
    assert sample_action(quarter, 0.999999) == 1


def test_sample_action_falls_back_to_the_last_positive_entry() -> None:
    # Cumulative rounding can leave u just above the final bracket edge.
    skewed = ActionDistribution([0.1] * 10, [True] * 10)
    assert sample_action(skewed, 0.9999999999999999) == 9
    with pytest.raises(ValueError):
        sample_action(ActionDistribution([0.0, 0.0], [False, False]), 0.5)


def test_sample_action_frequencies_match_probabilities() -> None:
    stream = RandomStream(606)
    coin = dist(0.5, 0.5)
    zeros = sum(1 for _ in range(100_000) if sample_action(coin, stream.random()) == 0)
    assert 0.49 <= zeros / 100_000 <= 0.51


def test_greedy_action_and_its_tie_rule() -> None:
    assert greedy_action(dist(0.2, 0.7, 0.1)) == 1
    assert greedy_action(dist(0.5, 0.5)) == 0
    with pytest.raises(ValueError):
        greedy_action(ActionDistribution([0.0], [False]))


@given(values=grid_vectors, delta=st.floats(0.1, 20.0))
def test_greedy_action_is_invariant_under_the_transform(values, delta) -> None:
    base = ActionDistribution.from_priorities(
        PriorityVector(values=values, mask=[True] * len(values)))
    assert greedy_action(delta_transform(base, delta)) == greedy_action(base)


def test_greedy_rollout_follows_the_tie_rule() -> None:
    # All-ties uniform priorities: greedy picks job 0 until it is exhausted.
    schedule = rollout(TWO_BY_TWO, UniformPolicy(), strategy=GREEDY)
    assert schedule.makespan == 11
    assert schedule.op_start == ((0, 3), (5, 7))


def test_single_op_instance_ignores_the_strategy() -> None:
    tiny = Instance(machine_order=((0,),), proc_time=((5,),))
    for strategy in STRATEGIES:
        assert rollout(tiny, UniformPolicy(), strategy=strategy, seed=3).makespan == 5


def test_rollouts_never_beat_the_enumerated_optimum() -> None:
    instance = generate_instance(GeneratorConfig(3, 3, seed=5))
    optimum = brute_force_optimum(instance).makespan
    for strategy in (DELTA, UNIFORM_RANDOM, GREEDY):
        for seed in range(10):
            schedule = rollout(instance, UniformPolicy(), strategy=strategy,
                               delta=0.7, seed=seed)
            assert schedule.makespan >= optimum


def test_rollout_is_deterministic_in_the_seed() -> None:
    instance = generate_instance(GeneratorConfig(4, 4, seed=2))
    first = rollout(instance, UniformPolicy(), strategy=UNIFORM_RANDOM, seed=99)
    second = rollout(instance, UniformPolicy(), strategy=UNIFORM_RANDOM, seed=99)
    assert first == second


def test_sampling_config_validation() -> None:
    with pytest.raises(ValueError):
        SamplingConfig(strategy="anneal")
    with pytest.raises(ValueError):
        SamplingConfig(delta=-1.0)
    with pytest.raises(ValueError):
        SamplingConfig(num_samples=0)
    with pytest.raises(ValueError):
        SamplingConfig(parallelism=0)
    with pytest.raises(ValueError):
        SamplingConfig(mode="eager")


def test_provenance_pins_everything_except_parallelism() -> None:
    config = SamplingConfig(policy=PolicySpec(kind="mwkr_softmax"), strategy=DELTA,
                            delta=2.0, num_samples=16, master_seed=7, parallelism=4)
    recipe = config.provenance("case")
    assert recipe["instance"] == "case"
    assert recipe["policy"] == "mwkr_softmax(T=1)"
    assert recipe["delta"] == 2.0
    assert recipe["master_seed"] == 7
    assert "parallelism" not in recipe


def test_sample_solutions_batch_invariants() -> None:
    config = SamplingConfig(num_samples=200, master_seed=31)
    batch = sample_solutions(TWO_BY_TWO, config)
    assert isinstance(batch, SampleBatch)
    assert len(batch.makespans) == 200
    assert batch.best_makespan == min(batch.makespans) == 7
    assert batch.makespans[batch.best_index] == 7
    report = validate_schedule(TWO_BY_TWO, batch.best_schedule)
    assert report.ok
    assert batch.best_schedule.makespan == 7


def test_sample_solutions_is_a_pure_function_of_the_config() -> None:
    instance = generate_instance(GeneratorConfig(6, 6, seed=6601))
    config = SamplingConfig(num_samples=16, master_seed=11)
    assert (sample_solutions(instance, config).makespans
            == sample_solutions(instance, config).makespans)
    reseeded = SamplingConfig(num_samples=16, master_seed=12)
    assert (sample_solutions(instance, config).makespans
            != sample_solutions(instance, reseeded).makespans)


def test_parallel_and_serial_pools_are_identical() -> None:
    instance = generate_instance(GeneratorConfig(4, 4, seed=40))
    serial = SamplingConfig(num_samples=8, master_seed=3, parallelism=1)
    parallel = SamplingConfig(num_samples=8, master_seed=3, parallelism=2)
    assert (sample_solutions(instance, serial).makespans
            == sample_solutions(instance, parallel).makespans)


def test_greedy_pools_are_clamped_to_one_rollout(caplog) -> None:
    config = SamplingConfig(strategy=GREEDY, num_samples=5)
    with caplog.at_level("WARNING"):
        batch = sample_solutions(TWO_BY_TWO, config)
    assert len(batch.makespans) == 1
    assert batch.best_makespan == rollout(TWO_BY_TWO, UniformPolicy(),
                                          strategy=GREEDY).makespan
    assert any("clamping" in message for message in caplog.messages)


def test_left_shift_mode_flows_through_sampling() -> None:
    gap_case = Instance(machine_order=((0, 1), (1, 0)), proc_time=((5, 1), (1, 1)))
    config = SamplingConfig(num_samples=64, master_seed=0, mode=LEFT_SHIFT)
    batch = sample_solutions(gap_case, config)
    assert batch.best_makespan == brute_force_optimum(gap_case, mode=LEFT_SHIFT).makespan
    assert validate_schedule(gap_case, batch.best_schedule).ok
