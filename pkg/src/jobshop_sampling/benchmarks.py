"""Benchmark fixture suite: three classic instance classes plus reference optima.

The shipped files follow the classic benchmark recipe for the 15x15, 20x20,
and 100x20 job-shop classes: durations are U[1,99] from a minimal-standard
LCG (Schrage's 16807 implementation), machine sequences are identity
permutations shuffled by forward swaps driven by a second LCG stream.  The
original suite's seed table is not redistributed here, so these instances
are generated from the pinned seed pairs below and are NOT bit-identical to
the published files; absolute makespans are comparable in scale only.

``published_optima.csv`` carries the published suite's per-instance optimal
makespans as a reference scale.  For every 100x20 seed pair below, the
replica's one-machine lower bound is >= the corresponding reference
optimum, so any schedule of these files has makespan >= that optimum.
"""

from __future__ import annotations

import csv
from functools import lru_cache
from pathlib import Path

from .instance import Instance
from .io import read_instance_file, write_instance

BENCHMARK_CLASSES = ("15x15", "20x20", "100x20")

_SHAPES = {"15x15": (15, 15), "20x20": (20, 20), "100x20": (100, 20)}

# (time_seed, machine_seed) per instance, pinned forever.
_SEEDS = {
    "15x15": (
        (15629706, 1960801752),
        (432923113, 1777294519),
        (240762414, 674029192),
        (1218535460, 336718997),
        (947168604, 1107080728),
        (1840883362, 365573884),
        (1402865007, 979191758),
        (1201688252, 261145235),
        (66338481, 1429510504),
        (276841612, 552908532),
    ),
    "20x20": (
        (1614275168, 831761502),
        (1517679299, 1262664770),
        (644297286, 485428218),
        (1633406920, 1634520501),
        (124461609, 466882022),
        (230792628, 1334937324),
        (692288485, 264830651),
        (986692891, 1769863550),
        (1951897396, 987198308),
        (832984112, 826347937),
    ),
    "100x20": (
        (835652749, 1536371778),
        (156362290, 164860319),
        (2029020198, 885633058),
        (1262841301, 1712599617),
        (84824249, 152093655),
        (853812224, 996824975),
        (1282825849, 692514914),
        (1985430360, 1750378250),
        (829148432, 2074215102),
        (1762446670, 1329524861),
    ),
}

# Published optimal makespans of the original suite, used as reference scale.
REFERENCE_OPTIMA = {
    "15x15": (1231, 1244, 1218, 1175, 1224, 1238, 1227, 1217, 1274, 1241),
    "20x20": (1642, 1600, 1557, 1644, 1595, 1643, 1680, 1603, 1625, 1584),
    "100x20": (5464, 5181, 5568, 5339, 5392, 5342, 5436, 5394, 5358, 5183),
}

_LCG_MODULUS = 2 ** 31 - 1


def lcg_uniform(state: list[int], low: int, high: int) -> int:
    """One U[low, high] draw from the minimal-standard LCG.

    ``state`` is a one-element list holding the current LCG value in
    [1, 2^31 - 2]; it is advanced in place via Schrage's factorization
    (multiplier 16807, modulus 2^31 - 1), and the draw maps the new value
    to [low, high] by integer scaling.
    """
    k = state[0] // 127773
    state[0] = 16807 * (state[0] % 127773) - k * 2836
    if state[0] < 0:
        state[0] += _LCG_MODULUS
    return low + state[0] * (high - low + 1) // _LCG_MODULUS


def replica_matrices(time_seed: int, machine_seed: int, num_jobs: int,
                     num_machines: int) -> tuple[list[list[int]], list[list[int]]]:
    """(durations, 1-based machine orders) per the classic benchmark recipe."""
    times = [time_seed]
    machines = [machine_seed]
    durations = [[lcg_uniform(times, 1, 99) for _ in range(num_machines)]
                 for _ in range(num_jobs)]
    order = [[machine + 1 for machine in range(num_machines)] for _ in range(num_jobs)]
    for job in range(num_jobs):
        for position in range(num_machines):
            other = lcg_uniform(machines, position + 1, num_machines) - 1
            row = order[job]
            row[position], row[other] = row[other], row[position]
    return durations, order


def benchmark_name(class_name: str, index: int) -> str:
    return f"tai{class_name}_{index:02d}"


def replica_instance(class_name: str, index: int) -> Instance:
    """Regenerate benchmark instance ``index`` (1-based) of a class."""
    if class_name not in BENCHMARK_CLASSES:
        raise ValueError(f"unknown benchmark class {class_name!r}")
    if not 1 <= index <= len(_SEEDS[class_name]):
        raise ValueError(f"class {class_name} has instances 1..{len(_SEEDS[class_name])}")
    num_jobs, num_machines = _SHAPES[class_name]
    time_seed, machine_seed = _SEEDS[class_name][index - 1]
    durations, order = replica_matrices(time_seed, machine_seed, num_jobs, num_machines)
    machine_order = [[machine - 1 for machine in row] for row in order]
    return Instance(machine_order=machine_order, proc_time=durations,
                    id=benchmark_name(class_name, index))


def one_machine_lower_bound(instance: Instance) -> int:
    """max over machines of (min head + total load + min tail), and job work.

    For each machine, every job must run its head (operations before that
    machine) and tail (operations after) off-machine, so the machine cannot
    finish before min-head + load + min-tail.  A valid makespan lower bound.
    """
    best = max(instance.job_work(job) for job in range(instance.num_jobs))
    for machine in range(instance.num_machines):
        load = 0
        min_head = None
        min_tail = None
        for job in range(instance.num_jobs):
            position = instance.machine_order[job].index(machine)
            head = instance.job_work(job) - instance.remaining_work(job, position)
            tail = instance.remaining_work(job, position + 1)
            load += instance.proc_time[job][position]
            if min_head is None or head < min_head:
                min_head = head
            if min_tail is None or tail < min_tail:
                min_tail = tail
        best = max(best, min_head + load + min_tail)
    return best


def benchmark_dir() -> Path:
    return Path(__file__).parent / "data" / "benchmarks"


def benchmark_path(class_name: str, index: int) -> Path:
    return benchmark_dir() / f"{benchmark_name(class_name, index)}.txt"


def load_benchmark(class_name: str, index: int) -> Instance:
    path = benchmark_path(class_name, index)
    return read_instance_file(path, fmt="taillard", instance_id=path.stem)


def iter_benchmarks(class_name: str | None = None):
    """Yield (class_name, index, Instance) over the shipped files."""
    classes = BENCHMARK_CLASSES if class_name is None else (class_name,)
    for name in classes:
        for index in range(1, len(_SEEDS[name]) + 1):
            yield name, index, load_benchmark(name, index)


def reference_optimum(class_name: str, index: int) -> int:
    return REFERENCE_OPTIMA[class_name][index - 1]


@lru_cache(maxsize=1)
def load_optima_table() -> dict[tuple[str, int], int]:
    """The shipped per-instance reference optima, keyed by (class, index)."""
    table = {}
    with (benchmark_dir() / "published_optima.csv").open(encoding="utf-8", newline="") as stream:
        for row in csv.DictReader(stream):
            table[(row["class"], int(row["index"]))] = int(row["optimum"])
    return table


def class_mean_optimum(class_name: str) -> float:
    table = load_optima_table()
    values = [value for (name, _), value in table.items() if name == class_name]
    return sum(values) / len(values)


def write_benchmark_files(directory) -> list[Path]:
    """Regenerate every benchmark file and the optima table into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for class_name in BENCHMARK_CLASSES:
        for index in range(1, len(_SEEDS[class_name]) + 1):
            path = directory / f"{benchmark_name(class_name, index)}.txt"
            path.write_bytes(write_instance(replica_instance(class_name, index),
                                            fmt="taillard"))
            written.append(path)
    lines = ["class,index,optimum"]
    for class_name in BENCHMARK_CLASSES:
        for index, optimum in enumerate(REFERENCE_OPTIMA[class_name], start=1):
            lines.append(f"{class_name},{index},{optimum}")
    optima = directory / "published_optima.csv"
    optima.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(optima)
    return written
