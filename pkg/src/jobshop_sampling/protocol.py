"""Engine-side client for external priority policies.

External policies run out of process and speak line-delimited JSON, either
over the stdio of a spawned subprocess or over a TCP stream:

* ``hello``        -> ``hello_ack``   (carries the instance, once per session)
* ``priorities``   -> ``priorities``  (one request, one reply, in order)
* ``bye``          -> stream closes
* any malformed request -> ``error`` reply, session continues

Endpoints are strings: ``tcp:HOST:PORT`` connects, anything else is treated
as a command line to spawn.  Every reply is validated before it reaches the
sampler; a misbehaving policy surfaces as a typed error and never corrupts
engine state.
"""

from __future__ import annotations

import json
import math
import os
import select
import shlex
import socket
import subprocess
import time
from dataclasses import dataclass, field

from .errors import PolicyTransportError, PolicyValidationError, ProtocolVersionError
from .instance import Instance
from .policies import Policy, PriorityVector
from .rng import RandomStream

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT = 30.0


class _LineChannel:
    """Buffered line IO over a pipe pair or a socket, with read timeouts."""

    def __init__(self, read_fn, write_fn, read_fileno: int):
        self._read_fn = read_fn
        self._write_fn = write_fn
        self._fileno = read_fileno
        self._buffer = b""
        self._eof = False

    def write_line(self, text: str) -> None:
        try:
            self._write_fn(text.encode("utf-8") + b"\n")
        except (BrokenPipeError, OSError) as exc:
            raise PolicyTransportError(f"endpoint closed while writing: {exc}") from exc

    def read_line(self, timeout: float) -> str | None:
        """Next line without its newline, or None at end of stream."""
        deadline = time.monotonic() + timeout
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line = self._buffer[:newline]
                self._buffer = self._buffer[newline + 1:]
                return line.decode("utf-8", errors="replace")
            if self._eof:
                if self._buffer:
                    line, self._buffer = self._buffer, b""
                    return line.decode("utf-8", errors="replace")
                return None
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise PolicyTransportError(f"timed out after {timeout:g}s waiting for a reply")
            readable, _, _ = select.select([self._fileno], [], [], remaining)
            if not readable:
                raise PolicyTransportError(f"timed out after {timeout:g}s waiting for a reply")
            chunk = self._read_fn(65536)
            if not chunk:
                self._eof = True
            else:
                self._buffer += chunk


def _open_channel(endpoint: str):
    """Returns (channel, closer, process-or-None)."""
    if endpoint.startswith("tcp:"):
        try:
            _, host, port = endpoint.split(":", 2)
            sock = socket.create_connection((host, int(port)), timeout=DEFAULT_TIMEOUT)
        except (OSError, ValueError) as exc:
            raise PolicyTransportError(f"cannot connect to {endpoint!r}: {exc}") from exc
        sock.setblocking(True)
        channel = _LineChannel(sock.recv, sock.sendall, sock.fileno())

        def closer():
            try:
                sock.close()
            except OSError:
                pass

        return channel, closer, None

    argv = shlex.split(endpoint)
    if not argv:
        raise PolicyTransportError("empty endpoint command")
    try:
        process = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
    except OSError as exc:
        raise PolicyTransportError(f"cannot spawn {endpoint!r}: {exc}") from exc
    stdout_fd = process.stdout.fileno()

    def write(data: bytes):
        process.stdin.write(data)
        process.stdin.flush()

    channel = _LineChannel(lambda n: os.read(stdout_fd, n), write, stdout_fd)

    def closer():
        for stream in (process.stdin, process.stdout):
            try:
                stream.close()
            except OSError:
                pass
        try:
            process.wait(timeout=5)
        except subprocess.TimeoutExpired:
            process.kill()
            process.wait()

    return channel, closer, process


class ExternalSession:
    """One handshaken connection to an external policy for one instance."""

    def __init__(self, endpoint: str, instance: Instance, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.instance = instance
        self.timeout = timeout
        self._closed = False
        self._channel, self._closer, self._process = _open_channel(endpoint)
        try:
            self.peer_name = self._handshake()
        except Exception:
            self._shutdown()
            raise

    def _handshake(self) -> str:
        instance = self.instance
        self.send_message({
            "type": "hello",
            "protocol_version": PROTOCOL_VERSION,
            "instance": {
                "jobs": instance.num_jobs,
                "machines": instance.num_machines,
                "machine_order": [list(row) for row in instance.machine_order],
                "proc_time": [list(row) for row in instance.proc_time],
            },
        })
        reply = self.receive_message()
        if reply.get("type") != "hello_ack":
            raise PolicyTransportError(f"expected hello_ack, got {reply.get('type')!r}")
        version = reply.get("protocol_version")
        if version != PROTOCOL_VERSION:
            raise ProtocolVersionError(
                f"peer speaks protocol version {version!r}, engine speaks {PROTOCOL_VERSION}")
        return str(reply.get("name", "unnamed"))

    def send_message(self, message: dict) -> None:
        if self._closed:
            raise PolicyTransportError("session is closed")
        self._channel.write_line(json.dumps(message, separators=(",", ":")))

    def send_raw_line(self, line: str) -> None:
        if self._closed:
            raise PolicyTransportError("session is closed")
        self._channel.write_line(line)

    def receive_message(self) -> dict:
        line = self._channel.read_line(self.timeout)
        if line is None:
            raise PolicyTransportError("endpoint closed the stream")
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PolicyTransportError(f"endpoint sent invalid JSON: {line[:200]!r}") from exc
        if not isinstance(message, dict):
            raise PolicyTransportError(f"endpoint sent a non-object message: {line[:200]!r}")
        return message

    def request_priorities(self, next_op, job_ready, machine_ready, mask) -> list[float]:
        self.send_message({
            "type": "priorities",
            "next_op": list(next_op),
            "job_ready": list(job_ready),
            "machine_ready": list(machine_ready),
            "mask": [bool(m) for m in mask],
        })
        reply = self.receive_message()
        if reply.get("type") == "error":
            raise PolicyTransportError(f"endpoint reported an error: {reply.get('message')!r}")
        if reply.get("type") != "priorities":
            raise PolicyTransportError(f"expected priorities reply, got {reply.get('type')!r}")
        return _validate_values(reply.get("values"), mask)

    def wait_for_close(self, timeout: float = 5.0) -> bool:
        """True if the peer closed its stream within the timeout."""
        try:
            return self._channel.read_line(timeout) is None
        except PolicyTransportError:
            return False

    def _shutdown(self):
        if not self._closed:
            self._closed = True
            self._closer()

    def close(self) -> None:
        """Send bye and release the connection; safe to call repeatedly."""
        if self._closed:
            return
        try:
            self._channel.write_line(json.dumps({"type": "bye"}))
        except PolicyTransportError:
            pass
        self._shutdown()


def _validate_values(values, mask) -> list[float]:
    if not isinstance(values, list):
        raise PolicyValidationError("priorities reply has no values array")
    if len(values) != len(mask):
        raise PolicyValidationError(
            f"priorities reply has {len(values)} values, expected {len(mask)}")
    cleaned = []
    any_positive = False
    for j, (value, feasible) in enumerate(zip(values, mask)):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise PolicyValidationError(f"value {j} is not a number: {value!r}")
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            raise PolicyValidationError(f"value {j} is not finite: {value!r}")
        if value < 0.0:
            raise PolicyValidationError(f"value {j} is negative: {value!r}")
        # Feasibility masking happens engine-side: off-mask endpoint values
        # are discarded, then the masked vector is re-normalized downstream.
        if feasible:
            cleaned.append(value)
            any_positive = any_positive or value > 0.0
        else:
            cleaned.append(0.0)
    if not any_positive:
        raise PolicyValidationError("all feasible values are zero")
    return cleaned


def open_external_session(endpoint: str, instance: Instance,
                          timeout: float = DEFAULT_TIMEOUT) -> ExternalSession:
    return ExternalSession(endpoint, instance, timeout=timeout)


def close_external_session(session: ExternalSession) -> None:
    session.close()


class ExternalPolicy(Policy):
    """Policy backed by an external session for one instance."""

    def __init__(self, endpoint: str, instance: Instance, timeout: float = DEFAULT_TIMEOUT):
        self._session = ExternalSession(endpoint, instance, timeout=timeout)

    def priority_values(self, state) -> PriorityVector:
        mask = [count < state.instance.num_machines for count in state.next_op]
        values = self._session.request_priorities(
            state.next_op, state.job_ready, state.machine_ready, mask)
        return PriorityVector(values=values, mask=mask)

    def close(self) -> None:
        self._session.close()


@dataclass
class ConformanceStep:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ConformanceReport:
    endpoint: str
    steps: list[ConformanceStep] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(step.passed for step in self.steps)


def check_conformance(endpoint: str, instance: Instance, exchanges: int = 100,
                      seed: int = 0, timeout: float = DEFAULT_TIMEOUT) -> ConformanceReport:
    """Run the wire-protocol conformance suite against an external policy."""
    report = ConformanceReport(endpoint=endpoint)
    stream = RandomStream(seed)
    session = None

    def record(name: str, passed: bool, detail: str = ""):
        report.steps.append(ConformanceStep(name=name, passed=passed, detail=detail))

    try:
        session = ExternalSession(endpoint, instance, timeout=timeout)
        record("handshake", True, f"peer={session.peer_name}")
    except Exception as exc:  # noqa: BLE001 - report, don't crash the checker
        record("handshake", False, str(exc))
        return report

    try:
        for _ in range(exchanges):
            state = _random_state(instance, stream)
            session.request_priorities(*state)
        record("priorities-exchanges", True, f"{exchanges} exchanges")
    except Exception as exc:  # noqa: BLE001
        record("priorities-exchanges", False, str(exc))

    try:
        session.send_raw_line("this is not json")
        reply = session.receive_message()
        if reply.get("type") != "error":
            record("malformed-recovery", False,
                   f"expected an error reply, got {reply.get('type')!r}")
        else:
            session.request_priorities(*_random_state(instance, stream))
            record("malformed-recovery", True, "error reply, then normal service")
    except Exception as exc:  # noqa: BLE001
        record("malformed-recovery", False, str(exc))

    try:
        session.send_message({"type": "bye"})
        closed = session.wait_for_close()
        record("bye", closed, "" if closed else "stream did not close after bye")
    except Exception as exc:  # noqa: BLE001
        record("bye", False, str(exc))
    finally:
        session.close()
    return report


def _random_state(instance: Instance, stream: RandomStream):
    """A plausible mid-rollout state for conformance exchanges."""
    num_jobs, num_machines = instance.num_jobs, instance.num_machines
    while True:
        next_op = [stream.randint(0, num_machines) for _ in range(num_jobs)]
        mask = [count < num_machines for count in next_op]
        if any(mask):
            break
    job_ready = [stream.randint(0, 50) for _ in range(num_jobs)]
    machine_ready = [stream.randint(0, 50) for _ in range(num_machines)]
    return next_op, job_ready, machine_ready, mask
