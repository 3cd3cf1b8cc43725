"""Deterministic dispatching environment.

A schedule is built by repeatedly choosing a job and placing that job's next
operation.  Two placement modes exist:

* ``semi_active``: the operation starts at ``max(job ready, machine ready)``,
  i.e. appended after the machine's last operation with no gap insertion.
* ``left_shift``: the operation is placed at the earliest time >= job ready
  that fits into an idle gap of its machine's timeline (including after the
  last interval).

``apply_action`` has value semantics (the input state is never mutated), so
rollouts and searches can branch freely.  The in-place variants are private
to the rollout hot path.
"""

from __future__ import annotations

from bisect import insort
from dataclasses import dataclass
from math import factorial

from .errors import EnumerationCapError, InfeasibleActionError
from .instance import Instance

SEMI_ACTIVE = "semi_active"
LEFT_SHIFT = "left_shift"
MODES = (SEMI_ACTIVE, LEFT_SHIFT)


class ScheduleState:
    """Partial schedule during dispatch.

    ``op_start[j][k]`` is -1 until job j's k-th operation is dispatched.
    ``machine_timeline[m]`` holds (start, end, job) sorted by start.
    """

    __slots__ = ("instance", "next_op", "job_ready", "machine_ready",
                 "op_start", "dispatched_count", "machine_timeline")

    def __init__(self, instance: Instance):
        self.instance = instance
        self.next_op = [0] * instance.num_jobs
        self.job_ready = [0] * instance.num_jobs
        self.machine_ready = [0] * instance.num_machines
        self.op_start = [[-1] * instance.num_machines for _ in range(instance.num_jobs)]
        self.dispatched_count = 0
        self.machine_timeline: list[list[tuple[int, int, int]]] = [
            [] for _ in range(instance.num_machines)
        ]

    def copy(self) -> "ScheduleState":
        dup = ScheduleState.__new__(ScheduleState)
        dup.instance = self.instance
        dup.next_op = self.next_op[:]
        dup.job_ready = self.job_ready[:]
        dup.machine_ready = self.machine_ready[:]
        dup.op_start = [row[:] for row in self.op_start]
        dup.dispatched_count = self.dispatched_count
        dup.machine_timeline = [timeline[:] for timeline in self.machine_timeline]
        return dup

    @property
    def complete(self) -> bool:
        return self.dispatched_count == self.instance.num_jobs * self.instance.num_machines

    def makespan(self) -> int:
        if not self.complete:
            raise ValueError("makespan is defined only for complete schedules")
        return max(self.job_ready)

    def to_schedule(self) -> "Schedule":
        return Schedule(op_start=tuple(tuple(row) for row in self.op_start),
                        makespan=self.makespan())


@dataclass(frozen=True)
class Schedule:
    """A complete schedule: start-time matrix plus its makespan."""

    op_start: tuple[tuple[int, ...], ...]
    makespan: int


def feasible_actions(state: ScheduleState) -> list[bool]:
    """Mask of jobs that still have an undispatched operation."""
    num_machines = state.instance.num_machines
    return [count < num_machines for count in state.next_op]


def _apply_inplace(state: ScheduleState, job: int, mode: str) -> int:
    """Dispatch the next operation of ``job``; returns its start time."""
    op_index = state.next_op[job]
    instance = state.instance
    if op_index >= instance.num_machines:
        raise InfeasibleActionError(
            f"job {job} has no remaining operations (next_op={op_index})")
    machine = instance.machine_order[job][op_index]
    duration = instance.proc_time[job][op_index]
    ready = state.job_ready[job]

    if mode == SEMI_ACTIVE:
        start = ready if ready >= state.machine_ready[machine] else state.machine_ready[machine]
        state.machine_timeline[machine].append((start, start + duration, job))
    elif mode == LEFT_SHIFT:
        start = _leftmost_fit(state.machine_timeline[machine], ready, duration)
        insort(state.machine_timeline[machine], (start, start + duration, job))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    end = start + duration
    state.op_start[job][op_index] = start
    state.next_op[job] = op_index + 1
    state.job_ready[job] = end
    if end > state.machine_ready[machine]:
        state.machine_ready[machine] = end
    state.dispatched_count += 1
    return start


def _leftmost_fit(timeline: list[tuple[int, int, int]], ready: int, duration: int) -> int:
    """Earliest start >= ready such that [start, start+duration) is idle."""
    candidate = ready
    for start, end, _ in timeline:
        if candidate + duration <= start:
            return candidate
        if end > candidate:
            candidate = end
    return candidate


def apply_action(state: ScheduleState, job: int, mode: str = SEMI_ACTIVE) -> ScheduleState:
    """Return the successor state after dispatching ``job``'s next operation."""
    if job < 0 or job >= state.instance.num_jobs:
        raise InfeasibleActionError(f"job index {job} out of range")
    successor = state.copy()
    _apply_inplace(successor, job, mode)
    return successor


def replay(instance: Instance, sequence, mode: str = SEMI_ACTIVE) -> Schedule:
    """Run a complete dispatch sequence through the engine transitions."""
    state = ScheduleState(instance)
    for job in sequence:
        _apply_inplace(state, job, mode)
    return state.to_schedule()


def all_dispatch_sequences(num_jobs: int, num_machines: int):
    """Yield every complete dispatch sequence (multiset permutations)."""
    remaining = [num_machines] * num_jobs
    sequence: list[int] = []
    total = num_jobs * num_machines

    def emit():
        if len(sequence) == total:
            yield tuple(sequence)
            return
        for job in range(num_jobs):
            if remaining[job]:
                remaining[job] -= 1
                sequence.append(job)
                yield from emit()
                sequence.pop()
                remaining[job] += 1

    yield from emit()


@dataclass
class ValidationReport:
    """Outcome of schedule validation; empty ``violations`` means feasible."""

    violations: list[str]
    recomputed_makespan: int

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_schedule(instance: Instance, schedule: Schedule) -> ValidationReport:
    """Check precedence, machine overlap, sign constraints, and the makespan."""
    num_jobs, num_machines = instance.num_jobs, instance.num_machines
    if len(schedule.op_start) != num_jobs or any(
            len(row) != num_machines for row in schedule.op_start):
        raise ValueError("op_start dimensions do not match the instance")

    violations: list[str] = []
    for j in range(num_jobs):
        for k in range(num_machines):
            start = schedule.op_start[j][k]
            if start < 0:
                violations.append(f"job {j} op {k}: negative start {start}")
            if k > 0:
                previous_end = schedule.op_start[j][k - 1] + instance.proc_time[j][k - 1]
                if start < previous_end:
                    violations.append(
                        f"job {j} op {k}: starts at {start} before previous op ends at {previous_end}")

    per_machine: list[list[tuple[int, int, int, int]]] = [[] for _ in range(num_machines)]
    for j in range(num_jobs):
        for k in range(num_machines):
            machine = instance.machine_order[j][k]
            start = schedule.op_start[j][k]
            per_machine[machine].append((start, start + instance.proc_time[j][k], j, k))
    for machine, intervals in enumerate(per_machine):
        intervals.sort()
        for (s1, e1, j1, k1), (s2, e2, j2, k2) in zip(intervals, intervals[1:]):
            if s2 < e1:
                violations.append(
                    f"machine {machine}: job {j1} op {k1} [{s1},{e1}) overlaps "
                    f"job {j2} op {k2} [{s2},{e2})")

    recomputed = max(schedule.op_start[j][k] + instance.proc_time[j][k]
                     for j in range(num_jobs) for k in range(num_machines))
    if recomputed != schedule.makespan:
        violations.append(
            f"stored makespan {schedule.makespan} != recomputed {recomputed}")
    return ValidationReport(violations=violations, recomputed_makespan=recomputed)


def dispatch_sequence_count(num_jobs: int, num_machines: int) -> int:
    """(J*M)! / (M!)^J: the number of complete dispatch sequences."""
    return factorial(num_jobs * num_machines) // factorial(num_machines) ** num_jobs


@dataclass
class BruteForceResult:
    makespan: int
    sequence: tuple[int, ...]
    sequences_evaluated: int


def brute_force_optimum(instance: Instance, mode: str = SEMI_ACTIVE,
                        cap: int = 10_000_000) -> BruteForceResult:
    """Minimum makespan over all dispatch sequences, by exhaustive search.

    Implemented as a self-contained recursive simulator (independent of the
    engine transition code) so it can serve as an oracle for it.  Guarded by
    ``cap`` on the total sequence count.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    count = dispatch_sequence_count(instance.num_jobs, instance.num_machines)
    if count > cap:
        raise EnumerationCapError(count, cap)

    num_jobs, num_machines = instance.num_jobs, instance.num_machines
    order, times = instance.machine_order, instance.proc_time
    next_op = [0] * num_jobs
    job_ready = [0] * num_jobs
    timelines: list[list[tuple[int, int]]] = [[] for _ in range(num_machines)]
    sequence: list[int] = []
    best = {"makespan": None, "sequence": None, "evaluated": 0}
    total = num_jobs * num_machines

    def place(job: int) -> tuple[int, int, int]:
        k = next_op[job]
        machine = order[job][k]
        duration = times[job][k]
        ready = job_ready[job]
        timeline = timelines[machine]
        if mode == SEMI_ACTIVE:
            machine_free = timeline[-1][1] if timeline else 0
            start = max(ready, machine_free)
            timeline.append((start, start + duration))
            slot = len(timeline) - 1
        else:
            start = ready
            slot = len(timeline)
            for index, (interval_start, interval_end) in enumerate(timeline):
                if start + duration <= interval_start:
                    slot = index
                    break
                if interval_end > start:
                    start = interval_end
            timeline.insert(slot, (start, start + duration))
        return machine, slot, start

    def undo(job: int, machine: int, slot: int, previous_ready: int):
        timelines[machine].pop(slot)
        next_op[job] -= 1
        job_ready[job] = previous_ready

    def recurse():
        if len(sequence) == total:
            makespan = max(job_ready)
            best["evaluated"] += 1
            if best["makespan"] is None or makespan < best["makespan"]:
                best["makespan"] = makespan
                best["sequence"] = tuple(sequence)
            return
        for job in range(num_jobs):
            if next_op[job] < num_machines:
                previous_ready = job_ready[job]
                k = next_op[job]
                machine, slot, start = place(job)
                next_op[job] = k + 1
                job_ready[job] = start + times[job][k]
                sequence.append(job)
                recurse()
                sequence.pop()
                undo(job, machine, slot, previous_ready)

    recurse()
    return BruteForceResult(makespan=best["makespan"], sequence=best["sequence"],
                            sequences_evaluated=best["evaluated"])
