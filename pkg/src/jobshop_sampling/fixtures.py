"""Small shipped fixtures: a hand-checkable 2x2 instance, a four-entry pool,
and ten seeded 6x6 instances used throughout the tests and docs."""

from __future__ import annotations

from pathlib import Path

from .instance import GeneratorConfig, Instance
from .io import generate_instance, read_instance_file, write_instance

SIX_BY_SIX_SEEDS = tuple(range(6601, 6611))


def fixture_dir() -> Path:
    return Path(__file__).parent / "data" / "fixtures"


def two_by_two() -> Instance:
    """Two jobs, two machines; optimum 7, worst dispatch order 11."""
    return Instance(machine_order=((0, 1), (1, 0)),
                    proc_time=((3, 2), (2, 4)),
                    id="two_by_two")


def two_by_two_path() -> Path:
    return fixture_dir() / "two_by_two.txt"


def four_values_path() -> Path:
    return fixture_dir() / "four_values.csv"


def six_by_six_paths() -> list[Path]:
    return [fixture_dir() / f"gen6x6_{index:02d}.txt"
            for index in range(1, len(SIX_BY_SIX_SEEDS) + 1)]


def six_by_six_suite() -> list[Instance]:
    return [read_instance_file(path, fmt="orlib", instance_id=path.stem)
            for path in six_by_six_paths()]


def write_fixture_files(directory) -> list[Path]:
    """Regenerate every fixture file into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []

    path = directory / "two_by_two.txt"
    path.write_bytes(write_instance(two_by_two(), fmt="orlib"))
    written.append(path)

    path = directory / "four_values.csv"
    path.write_text("index,makespan\n0,5\n1,3\n2,4\n3,2\n", encoding="utf-8")
    written.append(path)

    for index, seed in enumerate(SIX_BY_SIX_SEEDS, start=1):
        instance = generate_instance(GeneratorConfig(num_jobs=6, num_machines=6, seed=seed))
        path = directory / f"gen6x6_{index:02d}.txt"
        path.write_bytes(write_instance(instance, fmt="orlib"))
        written.append(path)
    return written
