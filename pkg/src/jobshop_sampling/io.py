"""Instance generation and file formats.

Two text formats are supported:

* ``orlib``:  first line ``J M``, then J lines each holding M
  ``machine duration`` pairs in operation order, machines 0-based.
* ``taillard``: first line ``J M``, then a JxM matrix of durations (row j =
  durations in operation order), then a JxM matrix of 1-based machine
  indices.

Both parsers tolerate arbitrary whitespace; writers emit single-space
separated fields with LF newlines, which is the canonical form asserted by
the round-trip tests.
"""

from __future__ import annotations

import re

from .errors import InstanceFormatError
from .instance import GeneratorConfig, Instance
from .rng import RandomStream

FORMATS = ("orlib", "taillard")


def generate_instance(config: GeneratorConfig) -> Instance:
    """Generate a seeded random instance.

    Draw order is pinned for reproducibility: first one Fisher-Yates shuffle
    of ``[0..M-1]`` per job (machine orders), then durations row-major via
    ``randint(low, high)``, all from a single ``RandomStream(seed)``.
    """
    stream = RandomStream(config.seed)
    j, m = config.num_jobs, config.num_machines
    machine_order = [stream.permutation(m) for _ in range(j)]
    low, high = config.proc_time_range
    proc_time = [[stream.randint(low, high) for _ in range(m)] for _ in range(j)]
    return Instance(
        machine_order=tuple(tuple(row) for row in machine_order),
        proc_time=tuple(tuple(row) for row in proc_time),
        id=f"gen-{j}x{m}-s{config.seed}",
    )


class _Tokens:
    """Whitespace token stream with 1-based line/column tracking."""

    def __init__(self, text: str):
        self._tokens: list[tuple[str, int, int]] = []
        for line_no, line in enumerate(text.splitlines(), start=1):
            for match in re.finditer(r"\S+", line):
                self._tokens.append((match.group(), line_no, match.start() + 1))
        self._pos = 0
        self.last_line = 1
        self.last_column = 1

    def exhausted(self) -> bool:
        return self._pos >= len(self._tokens)

    def next_int(self, what: str, minimum: int | None = None) -> int:
        if self.exhausted():
            raise InstanceFormatError(
                f"unexpected end of file while reading {what}", self.last_line)
        token, line, column = self._tokens[self._pos]
        self._pos += 1
        self.last_line, self.last_column = line, column
        try:
            value = int(token)
        except ValueError:
            raise InstanceFormatError(f"expected integer {what}, got {token!r}", line, column) from None
        if minimum is not None and value < minimum:
            raise InstanceFormatError(f"{what} must be >= {minimum}, got {value}", line, column)
        return value

    def expect_end(self):
        if not self.exhausted():
            token, line, column = self._tokens[self._pos]
            raise InstanceFormatError(f"trailing data {token!r} after instance body", line, column)


def parse_instance(data: bytes | str, fmt: str, instance_id: str | None = None) -> Instance:
    """Parse an instance file, normalizing machine indices to 0-based."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    tokens = _Tokens(text)
    num_jobs = tokens.next_int("job count", minimum=1)
    num_machines = tokens.next_int("machine count", minimum=1)

    if fmt == "orlib":
        machine_order, proc_time = _parse_orlib_body(tokens, num_jobs, num_machines)
    else:
        machine_order, proc_time = _parse_taillard_body(tokens, num_jobs, num_machines)
    tokens.expect_end()
    return Instance(
        machine_order=tuple(tuple(row) for row in machine_order),
        proc_time=tuple(tuple(row) for row in proc_time),
        id=instance_id or f"parsed-{num_jobs}x{num_machines}",
    )


def _parse_orlib_body(tokens: _Tokens, num_jobs: int, num_machines: int):
    machine_order, proc_time = [], []
    for j in range(num_jobs):
        machines, durations = [], []
        for _ in range(num_machines):
            machine = tokens.next_int(f"machine index (job {j})", minimum=0)
            if machine >= num_machines:
                raise InstanceFormatError(
                    f"machine index {machine} out of range for {num_machines} machines (job {j})",
                    tokens.last_line, tokens.last_column)
            duration = tokens.next_int(f"duration (job {j})", minimum=1)
            machines.append(machine)
            durations.append(duration)
        _check_permutation(machines, j, num_machines, tokens)
        machine_order.append(machines)
        proc_time.append(durations)
    return machine_order, proc_time


def _check_permutation(row: list[int], job: int, num_machines: int, tokens: _Tokens):
    if set(row) != set(range(num_machines)):
        raise InstanceFormatError(
            f"machine row of job {job} is not a permutation of 0..{num_machines - 1}",
            tokens.last_line)


def _parse_taillard_body(tokens: _Tokens, num_jobs: int, num_machines: int):
    proc_time = [
        [tokens.next_int(f"duration (job {j})", minimum=1) for _ in range(num_machines)]
        for j in range(num_jobs)
    ]
    machine_order = []
    for j in range(num_jobs):
        row = []
        for _ in range(num_machines):
            machine = tokens.next_int(f"machine index (job {j})", minimum=1)
            if machine > num_machines:
                raise InstanceFormatError(
                    f"machine index {machine} out of range for {num_machines} machines (job {j})",
                    tokens.last_line, tokens.last_column)
            row.append(machine - 1)
        _check_permutation(row, j, num_machines, tokens)
        machine_order.append(row)
    return machine_order, proc_time


def write_instance(instance: Instance, fmt: str) -> bytes:
    """Serialize an instance to its canonical form in the given format."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    lines = [f"{instance.num_jobs} {instance.num_machines}"]
    if fmt == "orlib":
        for machines, durations in zip(instance.machine_order, instance.proc_time):
            pairs = []
            for machine, duration in zip(machines, durations):
                pairs.append(f"{machine} {duration}")
            lines.append(" ".join(pairs))
    else:
        for durations in instance.proc_time:
            lines.append(" ".join(str(d) for d in durations))
        for machines in instance.machine_order:
            lines.append(" ".join(str(m + 1) for m in machines))
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_instance_file(path, fmt: str | None = None, instance_id: str | None = None) -> Instance:
    """Read an instance from disk, inferring the format when not given.

    Inference: try orlib first, fall back to taillard; ambiguity is not a
    practical concern because orlib bodies contain 0-valued machine tokens
    that taillard files (1-based machines, durations >= 1) never do.
    """
    from pathlib import Path

    raw = Path(path).read_bytes()
    name = instance_id or Path(path).stem
    if fmt is not None:
        return parse_instance(raw, fmt, instance_id=name)
    try:
        return parse_instance(raw, "orlib", instance_id=name)
    except InstanceFormatError:
        return parse_instance(raw, "taillard", instance_id=name)
