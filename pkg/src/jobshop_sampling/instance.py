"""Problem instance model: jobs, machine orders, and processing times."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(eq=False)
class Instance:
    """A rectangular job-shop instance.

    Row ``j`` of ``machine_order`` is the machine visiting sequence of job
    ``j`` (0-based machine indices, each row a permutation of the machines).
    ``proc_time[j][k]`` is the integer duration of job ``j``'s k-th operation.
    Instances are immutable after construction and safe to share across
    threads; equality is structural over the two matrices (``id`` is
    metadata).
    """

    machine_order: tuple[tuple[int, ...], ...]
    proc_time: tuple[tuple[int, ...], ...]
    id: str = "unnamed"
    _remaining_work: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        self.machine_order = tuple(tuple(row) for row in self.machine_order)
        self.proc_time = tuple(tuple(row) for row in self.proc_time)
        if not self.machine_order:
            raise ValueError("instance needs at least one job")
        num_machines = len(self.machine_order[0])
        if num_machines == 0:
            raise ValueError("instance needs at least one machine")
        if len(self.proc_time) != len(self.machine_order):
            raise ValueError("machine_order and proc_time must have the same number of rows")
        expected = set(range(num_machines))
        for j, (machines, durations) in enumerate(zip(self.machine_order, self.proc_time)):
            if len(machines) != num_machines or len(durations) != num_machines:
                raise ValueError(f"job {j}: rows must all have {num_machines} operations")
            if set(machines) != expected:
                raise ValueError(f"job {j}: machine row is not a permutation of 0..{num_machines - 1}")
            for k, duration in enumerate(durations):
                if not isinstance(duration, int) or duration < 1:
                    raise ValueError(f"job {j}, op {k}: duration must be an integer >= 1")
        # Suffix sums of processing time, used by work-remaining policies.
        remaining = []
        for durations in self.proc_time:
            suffix = [0] * (num_machines + 1)
            for k in range(num_machines - 1, -1, -1):
                suffix[k] = suffix[k + 1] + durations[k]
            remaining.append(tuple(suffix))
        object.__setattr__(self, "_remaining_work", tuple(remaining))

    @property
    def num_jobs(self) -> int:
        return len(self.machine_order)

    @property
    def num_machines(self) -> int:
        return len(self.machine_order[0])

    def remaining_work(self, job: int, next_op: int) -> int:
        """Total processing time of job's operations from ``next_op`` onward."""
        return self._remaining_work[job][next_op]

    def job_work(self, job: int) -> int:
        return self._remaining_work[job][0]

    def machine_loads(self) -> list[int]:
        """Total processing time assigned to each machine."""
        loads = [0] * self.num_machines
        for machines, durations in zip(self.machine_order, self.proc_time):
            for machine, duration in zip(machines, durations):
                loads[machine] += duration
        return loads

    def trivial_lower_bound(self) -> int:
        """max(job work, machine load): a valid makespan lower bound."""
        return max(max(self._remaining_work[j][0] for j in range(self.num_jobs)),
                   max(self.machine_loads()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.machine_order == other.machine_order
                and self.proc_time == other.proc_time)

    __hash__ = None  # mutable-adjacent sentinel: use write_instance() bytes as a key instead


@dataclass
class GeneratorConfig:
    """Configuration for seeded random instance generation."""

    num_jobs: int
    num_machines: int
    seed: int
    proc_time_range: tuple[int, int] = (1, 99)

    def __post_init__(self):
        if self.num_jobs < 1 or self.num_machines < 1:
            raise ValueError("num_jobs and num_machines must be >= 1")
        low, high = self.proc_time_range
        if low < 1 or low > high:
            raise ValueError("proc_time_range must satisfy 1 <= low <= high")
