"""Manifest-driven experiment harness.

Three experiment kinds, all reproducible from a JSON manifest plus a master
seed, all writing their outputs atomically under the manifest's out_dir:

* ``hypothesis``: build a large pool per (strategy, instance), reduce each
  pool to a best-of-s estimate curve, and average the curves across
  instances.  Emits the plot-data CSV (one series per strategy over the
  size grid) and a summary with the explorative/exploitative crossing.
* ``delta_table``: run the delta search once per sample size and emit the
  best delta per cell.
* ``improvement``: on held-out test instances, compare best-of-N sampling
  at the tuned delta against delta=1 sampling and the deterministic
  rollout, and report mean makespans plus the relative improvement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import benchmarks
from .dispatch import MODES, SEMI_ACTIVE
from .instance import GeneratorConfig, Instance
from .io import generate_instance, read_instance_file
from .policies import PolicySpec
from .pools import SamplePool, estimate_curve, write_text_atomic
from .rng import derive_seed
from .sampling import (DELTA, GREEDY, STRATEGIES, UNIFORM_RANDOM, SampleBatch,
                       SamplingConfig, sample_solutions)
from .search import (BOTH_SIDES, DEFAULT_CANDIDATES, DeltaSearchConfig, MIDPOINT_RULES,
                     search_delta, write_search_trace)

KINDS = ("hypothesis", "delta_table", "improvement")

DEFAULT_HYPOTHESIS_STRATEGIES = (
    (UNIFORM_RANDOM, None),
    (DELTA, 1.0),
    (DELTA, 0.05),
    (DELTA, 10.0),
)


@dataclass
class InstanceSource:
    """Where an experiment's instances come from.

    kind "generated": one seeded instance per entry of ``seeds``.
    kind "benchmark": the shipped benchmark files of one class.
    kind "files": explicit instance files.
    """

    kind: str
    num_jobs: int = 0
    num_machines: int = 0
    seeds: tuple[int, ...] = ()
    class_name: str = ""
    indices: tuple[int, ...] = ()
    paths: tuple[str, ...] = ()
    fmt: str | None = None

    def __post_init__(self):
        if self.kind == "generated":
            if self.num_jobs < 1 or self.num_machines < 1 or not self.seeds:
                raise ValueError("generated source needs num_jobs, num_machines, seeds")
        elif self.kind == "benchmark":
            if self.class_name not in benchmarks.BENCHMARK_CLASSES:
                raise ValueError(f"unknown benchmark class {self.class_name!r}")
            if not self.indices:
                count = len(benchmarks.REFERENCE_OPTIMA[self.class_name])
                self.indices = tuple(range(1, count + 1))
        elif self.kind == "files":
            if not self.paths:
                raise ValueError("files source needs at least one path")
        else:
            raise ValueError(f"unknown instance source kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == "generated":
            return f"{self.num_jobs}x{self.num_machines}"
        if self.kind == "benchmark":
            return self.class_name
        return "files"

    def load(self) -> list[Instance]:
        if self.kind == "generated":
            return [generate_instance(GeneratorConfig(self.num_jobs, self.num_machines, seed))
                    for seed in self.seeds]
        if self.kind == "benchmark":
            return [benchmarks.load_benchmark(self.class_name, index)
                    for index in self.indices]
        return [read_instance_file(path, fmt=self.fmt) for path in self.paths]

    def optima(self) -> list[int] | None:
        """Per-instance reference optima, when the source has them."""
        if self.kind == "benchmark":
            return [benchmarks.reference_optimum(self.class_name, index)
                    for index in self.indices]
        return None

    @classmethod
    def from_json(cls, data: dict) -> "InstanceSource":
        return cls(
            kind=data["kind"],
            num_jobs=int(data.get("num_jobs", 0)),
            num_machines=int(data.get("num_machines", 0)),
            seeds=tuple(int(s) for s in data.get("seeds", ())),
            class_name=data.get("class", ""),
            indices=tuple(int(i) for i in data.get("indices", ())),
            paths=tuple(data.get("paths", ())),
            fmt=data.get("format"),
        )

    def to_json(self) -> dict:
        if self.kind == "generated":
            return {"kind": self.kind, "num_jobs": self.num_jobs,
                    "num_machines": self.num_machines, "seeds": list(self.seeds)}
        if self.kind == "benchmark":
            return {"kind": self.kind, "class": self.class_name,
                    "indices": list(self.indices)}
        data = {"kind": self.kind, "paths": list(self.paths)}
        if self.fmt:
            data["format"] = self.fmt
        return data


@dataclass
class ExperimentManifest:
    """One experiment, fully pinned: instances, policy, sizes, seed, outputs."""

    kind: str
    policy: PolicySpec
    instances: InstanceSource
    sizes: tuple[int, ...]
    pool_size: int = 10_000
    strategies: tuple[tuple[str, float | None], ...] = DEFAULT_HYPOTHESIS_STRATEGIES
    master_seed: int = 0
    out_dir: str | None = None
    mode: str = SEMI_ACTIVE
    parallelism: int = 1
    initial_candidates: tuple[float, ...] = DEFAULT_CANDIDATES
    max_iterations: int = 3
    min_spacing: float = 0.01
    midpoint_rule: str = BOTH_SIDES
    test_instances: InstanceSource | None = None
    best_deltas: dict[int, float] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        self.sizes = tuple(int(s) for s in self.sizes)
        if not self.sizes:
            raise ValueError("at least one sample size is required")
        for previous, current in zip(self.sizes, self.sizes[1:]):
            if current <= previous:
                raise ValueError("sizes must be strictly ascending")
        if self.sizes[0] < 1:
            raise ValueError("sizes must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.midpoint_rule not in MIDPOINT_RULES:
            raise ValueError(f"midpoint_rule must be one of {MIDPOINT_RULES}")
        if self.kind == "hypothesis":
            if self.pool_size < 1:
                raise ValueError("pool_size must be >= 1")
            if self.sizes[-1] > self.pool_size:
                raise ValueError("every size must be <= pool_size for hypothesis runs")
            for strategy, delta in self.strategies:
                if strategy not in STRATEGIES:
                    raise ValueError(f"unknown strategy {strategy!r}")
                if strategy == DELTA and (delta is None or delta < 0):
                    raise ValueError("delta strategies need a nonnegative delta")
        if self.kind == "improvement" and self.test_instances is None:
            raise ValueError("improvement runs need test_instances")

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentManifest":
        policy = data.get("policy", {})
        spec = PolicySpec(kind=policy.get("kind", "uniform"),
                          temperature=float(policy.get("temperature", 1.0)),
                          endpoint=policy.get("endpoint"))
        strategies = data.get("strategies")
        if strategies is None:
            parsed = DEFAULT_HYPOTHESIS_STRATEGIES
        else:
            parsed = tuple((entry[0], None if entry[1] is None else float(entry[1]))
                           for entry in strategies)
        best = data.get("best_deltas")
        return cls(
            kind=data["kind"],
            policy=spec,
            instances=InstanceSource.from_json(data["instances"]),
            sizes=tuple(data["sizes"]),
            pool_size=int(data.get("pool_size", 10_000)),
            strategies=parsed,
            master_seed=int(data.get("master_seed", 0)),
            out_dir=data.get("out_dir"),
            mode=data.get("mode", SEMI_ACTIVE),
            parallelism=int(data.get("parallelism", 1)),
            initial_candidates=tuple(data.get("initial_candidates", DEFAULT_CANDIDATES)),
            max_iterations=int(data.get("max_iterations", 3)),
            min_spacing=float(data.get("min_spacing", 0.01)),
            midpoint_rule=data.get("midpoint_rule", BOTH_SIDES),
            test_instances=(InstanceSource.from_json(data["test_instances"])
                            if "test_instances" in data else None),
            best_deltas=(None if best is None
                         else {int(size): float(delta) for size, delta in best.items()}),
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentManifest":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_json(self) -> dict:
        policy = {"kind": self.policy.kind, "temperature": self.policy.temperature}
        if self.policy.endpoint:
            policy["endpoint"] = self.policy.endpoint
        data = {
            "kind": self.kind,
            "policy": policy,
            "instances": self.instances.to_json(),
            "sizes": list(self.sizes),
            "master_seed": self.master_seed,
            "mode": self.mode,
            "parallelism": self.parallelism,
        }
        if self.out_dir is not None:
            data["out_dir"] = self.out_dir
        if self.kind == "hypothesis":
            data["pool_size"] = self.pool_size
            data["strategies"] = [[strategy, delta] for strategy, delta in self.strategies]
        if self.kind in ("delta_table", "improvement"):
            data["initial_candidates"] = list(self.initial_candidates)
            data["max_iterations"] = self.max_iterations
            data["min_spacing"] = self.min_spacing
            data["midpoint_rule"] = self.midpoint_rule
        if self.test_instances is not None:
            data["test_instances"] = self.test_instances.to_json()
        if self.best_deltas is not None:
            data["best_deltas"] = {str(size): delta
                                   for size, delta in sorted(self.best_deltas.items())}
        return data


def strategy_label(strategy: str, delta: float | None) -> str:
    if strategy == DELTA:
        return f"delta={delta:g}"
    return strategy


@dataclass
class HypothesisResult:
    sizes: tuple[int, ...]
    labels: tuple[str, ...]
    curves: dict[str, tuple[float, ...]]
    crossing_size: int | None
    explorative: str | None
    exploitative: str | None


def run_hypothesis(manifest: ExperimentManifest) -> HypothesisResult:
    """Mean estimate curves per strategy, plus the curve-crossing summary.

    Pool seeds derive from (master_seed, strategy position, instance
    position), so every cell is independent and the whole run is one pure
    function of the manifest.
    """
    if manifest.kind != "hypothesis":
        raise ValueError(f"expected a hypothesis manifest, got kind {manifest.kind!r}")
    instances = manifest.instances.load()
    labels = tuple(strategy_label(s, d) for s, d in manifest.strategies)
    curves: dict[str, tuple[float, ...]] = {}

    for strategy_index, (strategy, delta) in enumerate(manifest.strategies):
        sums = [0.0] * len(manifest.sizes)
        for instance_index, instance in enumerate(instances):
            batch = sample_solutions(instance, SamplingConfig(
                policy=manifest.policy,
                strategy=strategy,
                delta=1.0 if delta is None else delta,
                num_samples=manifest.pool_size,
                mode=manifest.mode,
                master_seed=derive_seed(manifest.master_seed, strategy_index,
                                        instance_index),
                parallelism=manifest.parallelism,
            ))
            pool = SamplePool(makespans=batch.makespans)
            for position, (_, estimate) in enumerate(estimate_curve(pool, manifest.sizes)):
                sums[position] += estimate
        curves[labels[strategy_index]] = tuple(total / len(instances) for total in sums)

    explorative, exploitative = _delta_extremes(manifest.strategies)
    crossing = None
    if explorative is not None and exploitative is not None:
        low, high = curves[explorative], curves[exploitative]
        for position, size in enumerate(manifest.sizes):
            if low[position] < high[position]:
                crossing = size
                break
    result = HypothesisResult(sizes=manifest.sizes, labels=labels, curves=curves,
                              crossing_size=crossing, explorative=explorative,
                              exploitative=exploitative)
    if manifest.out_dir is not None:
        _write_hypothesis_outputs(manifest, result)
    return result


def _delta_extremes(strategies) -> tuple[str | None, str | None]:
    """Labels of the smallest-delta and largest-delta strategies, if any."""
    deltas = [(delta, strategy_label(s, delta)) for s, delta in strategies
              if s == DELTA and delta is not None]
    if len(deltas) < 2:
        return None, None
    deltas.sort(key=lambda pair: pair[0])
    return deltas[0][1], deltas[-1][1]


def _write_hypothesis_outputs(manifest: ExperimentManifest, result: HypothesisResult):
    out = Path(manifest.out_dir)
    lines = ["size," + ",".join(result.labels)]
    for position, size in enumerate(result.sizes):
        row = [str(size)]
        row.extend(f"{result.curves[label][position]:.6f}" for label in result.labels)
        lines.append(",".join(row))
    write_text_atomic(out / "hypothesis_curves.csv", "\n".join(lines) + "\n")
    summary = {
        "manifest": manifest.to_json(),
        "explorative": result.explorative,
        "exploitative": result.exploitative,
        "crossing_size": result.crossing_size,
    }
    write_text_atomic(out / "hypothesis_summary.json",
                      json.dumps(summary, sort_keys=True, indent=2) + "\n")


@dataclass
class DeltaTableResult:
    policy_id: str
    instance_label: str
    cells: dict[int, float]      # sample size -> best delta
    scores: dict[int, float]     # sample size -> mean best-of-N makespan

    def row(self) -> tuple[str, str, dict[int, float]]:
        return self.policy_id, self.instance_label, self.cells


def run_delta_table(manifest: ExperimentManifest, evaluate=None) -> DeltaTableResult:
    """Delta search per sample size; cell seeds derive from (master_seed, size)."""
    if manifest.kind != "delta_table":
        raise ValueError(f"expected a delta_table manifest, got kind {manifest.kind!r}")
    validation = manifest.instances.load()
    cells: dict[int, float] = {}
    scores: dict[int, float] = {}
    for size in manifest.sizes:
        config = DeltaSearchConfig(
            validation_instances=validation,
            sample_size=size,
            initial_candidates=manifest.initial_candidates,
            max_iterations=manifest.max_iterations,
            min_spacing=manifest.min_spacing,
            master_seed=derive_seed(manifest.master_seed, size),
            mode=manifest.mode,
            parallelism=manifest.parallelism,
            midpoint_rule=manifest.midpoint_rule,
        )
        result = search_delta(manifest.policy, config, evaluate=evaluate)
        cells[size] = result.best_delta
        scores[size] = result.best_score
        if manifest.out_dir is not None:
            write_search_trace(result, Path(manifest.out_dir) / f"search_n{size}.json")
    table = DeltaTableResult(policy_id=manifest.policy.policy_id,
                             instance_label=manifest.instances.label,
                             cells=cells, scores=scores)
    if manifest.out_dir is not None:
        write_text_atomic(Path(manifest.out_dir) / "delta_table.csv",
                          render_delta_table([table.row()], manifest.sizes))
    return table


def render_delta_table(rows, sizes) -> str:
    """CSV table: one row per (policy, instance set), one column per size."""
    sizes = tuple(int(s) for s in sizes)
    lines = ["policy,instances," + ",".join(str(s) for s in sizes)]
    for policy_id, label, cells in rows:
        rendered = [f"{cells[size]:.2f}" for size in sizes]
        lines.append(f"{policy_id},{label}," + ",".join(rendered))
    return "\n".join(lines) + "\n"


@dataclass
class ImprovementRow:
    """One (instance class, sample size) comparison of the three arms."""

    sample_size: int
    policy_id: str
    instance_label: str
    best_delta: float
    mean_ours: float
    mean_stochastic: float
    mean_deterministic: float
    gap: float | None = None

    @property
    def improvement(self) -> float:
        return (self.mean_stochastic - self.mean_ours) / self.mean_stochastic

    @property
    def improvement_percent(self) -> str:
        return f"{self.improvement * 100:.1f}%"


def run_improvement(manifest: ExperimentManifest) -> list[ImprovementRow]:
    """Tuned-delta vs delta=1 vs deterministic on held-out test instances.

    best_deltas missing from the manifest are found first by running the
    delta search on the manifest's (validation) instances.  Test pools use
    seeds derived from (master_seed, arm, size, instance position), so the
    three arms are sampled independently.
    """
    if manifest.kind != "improvement":
        raise ValueError(f"expected an improvement manifest, got kind {manifest.kind!r}")
    best_deltas = dict(manifest.best_deltas or {})
    missing = [size for size in manifest.sizes if size not in best_deltas]
    if missing:
        table = run_delta_table(ExperimentManifest(
            kind="delta_table",
            policy=manifest.policy,
            instances=manifest.instances,
            sizes=tuple(missing),
            master_seed=manifest.master_seed,
            mode=manifest.mode,
            parallelism=manifest.parallelism,
            initial_candidates=manifest.initial_candidates,
            max_iterations=manifest.max_iterations,
            min_spacing=manifest.min_spacing,
            midpoint_rule=manifest.midpoint_rule,
        ))
        best_deltas.update(table.cells)

    test_instances = manifest.test_instances.load()
    optima = manifest.test_instances.optima()
    label = manifest.test_instances.label
    rows = []
    for size in manifest.sizes:
        arms = {}
        for arm, (strategy, delta, samples) in {
            "ours": (DELTA, best_deltas[size], size),
            "stochastic": (DELTA, 1.0, size),
            "deterministic": (GREEDY, 1.0, 1),
        }.items():
            total = 0.0
            for instance_index, instance in enumerate(test_instances):
                batch = sample_solutions(instance, SamplingConfig(
                    policy=manifest.policy,
                    strategy=strategy,
                    delta=delta,
                    num_samples=samples,
                    mode=manifest.mode,
                    master_seed=derive_seed(manifest.master_seed, _ARM_SALT[arm], size,
                                            instance_index),
                    parallelism=manifest.parallelism,
                ))
                total += batch.best_makespan
            arms[arm] = total / len(test_instances)
        gap = None
        if optima is not None:
            mean_optimum = sum(optima) / len(optima)
            gap = (arms["ours"] - mean_optimum) / mean_optimum
        rows.append(ImprovementRow(
            sample_size=size,
            policy_id=manifest.policy.policy_id,
            instance_label=label,
            best_delta=best_deltas[size],
            mean_ours=arms["ours"],
            mean_stochastic=arms["stochastic"],
            mean_deterministic=arms["deterministic"],
            gap=gap,
        ))
    if manifest.out_dir is not None:
        _write_improvement_outputs(manifest, rows)
    return rows


_ARM_SALT = {"ours": 1, "stochastic": 2, "deterministic": 3}


def _write_improvement_outputs(manifest: ExperimentManifest, rows: list[ImprovementRow]):
    out = Path(manifest.out_dir)
    lines = ["policy,instances,sample_size,best_delta,mean_ours,mean_stochastic,"
             "mean_deterministic,improvement,gap"]
    for row in rows:
        gap = "" if row.gap is None else f"{row.gap:.6f}"
        lines.append(f"{row.policy_id},{row.instance_label},{row.sample_size},"
                     f"{row.best_delta:.2f},{row.mean_ours:.6f},{row.mean_stochastic:.6f},"
                     f"{row.mean_deterministic:.6f},{row.improvement:.6f},{gap}")
    write_text_atomic(out / "improvement_table.csv", "\n".join(lines) + "\n")
    summary = {
        "manifest": manifest.to_json(),
        "rows": [
            {
                "sample_size": row.sample_size,
                "best_delta": row.best_delta,
                "mean_ours": row.mean_ours,
                "mean_stochastic": row.mean_stochastic,
                "mean_deterministic": row.mean_deterministic,
                "improvement": row.improvement,
                "improvement_percent": row.improvement_percent,
                "gap": row.gap,
            }
            for row in rows
        ],
    }
    write_text_atomic(out / "improvement_summary.json",
                      json.dumps(summary, sort_keys=True, indent=2) + "\n")


def count_equal_best(batches_a: list[SampleBatch], batches_b: list[SampleBatch]) -> int:
    """How many instances found the same best makespan in both batches."""
    if len(batches_a) != len(batches_b):
        raise ValueError(f"batch lists differ in length: {len(batches_a)} vs {len(batches_b)}")
    count = 0
    for a, b in zip(batches_a, batches_b):
        if a.instance_id != b.instance_id:
            raise ValueError(f"instance mismatch: {a.instance_id!r} vs {b.instance_id!r}")
        if a.best_makespan == b.best_makespan:
            count += 1
    return count
