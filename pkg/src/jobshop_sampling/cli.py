"""Command line front end.

Exit codes: 0 success; 1 usage error (bad flags or flag values); 2 runtime
error (IO, transport, unexpected failures); 3 validation failure (a check
that ran and found violations: schedule validation, instance format
problems, protocol nonconformance).

Every subcommand logs its resolved configuration to stderr before doing any
work, so runs are auditable; stdout carries only the primary result
(makespans, estimates, table cells, file paths).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import experiments, fixtures, protocol
from .dispatch import MODES, SEMI_ACTIVE, Schedule, validate_schedule
from .errors import InstanceFormatError, JobShopError, PolicyValidationError
from .instance import GeneratorConfig
from .io import FORMATS, generate_instance, read_instance_file, write_instance
from .policies import POLICY_KINDS, PolicySpec
from .pools import SamplePool, estimate_curve, read_pool, write_pool
from .sampling import DELTA, GREEDY, UNIFORM_RANDOM, SamplingConfig, sample_solutions

logger = logging.getLogger(__name__)

STRATEGY_FLAGS = {"delta": DELTA, "uniform": UNIFORM_RANDOM, "deterministic": GREEDY}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures reported as exit code 1, not 2."""

    def error(self, message):
        raise _UsageError(message)


def _log_config(subcommand: str, config: dict) -> None:
    logger.info("resolved config: %s",
                json.dumps({"subcommand": subcommand, **config}, sort_keys=True))


def _policy_spec(args) -> PolicySpec:
    return PolicySpec(kind=args.policy, temperature=args.temperature,
                      endpoint=getattr(args, "endpoint", None))


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _log_config("generate", {"jobs": args.jobs, "machines": args.machines,
                             "seed": args.seed, "count": args.count,
                             "format": args.format, "out": str(out)})
    for offset in range(args.count):
        seed = args.seed + offset
        instance = generate_instance(GeneratorConfig(args.jobs, args.machines, seed))
        path = out / f"gen{args.jobs}x{args.machines}_s{seed}.txt"
        path.write_bytes(write_instance(instance, fmt=args.format))
        print(path)
    return 0


def cmd_sample(args) -> int:
    instance = read_instance_file(args.instance)
    config = SamplingConfig(
        policy=_policy_spec(args),
        strategy=STRATEGY_FLAGS[args.strategy],
        delta=args.delta,
        num_samples=args.samples,
        mode=args.mode,
        master_seed=args.seed,
        parallelism=args.parallelism,
    )
    _log_config("sample", {"instance": str(args.instance), "out": str(args.out),
                           **config.provenance(instance.id),
                           "parallelism": config.parallelism})
    batch = sample_solutions(instance, config)
    out = Path(args.out)
    pool_path = out / f"{instance.id}_pool.csv"
    write_pool(SamplePool.from_batch(batch, config), pool_path)
    logger.info("pool written to %s", pool_path)
    if args.schedule_out:
        payload = {"instance": instance.id,
                   "op_start": [list(row) for row in batch.best_schedule.op_start],
                   "makespan": batch.best_schedule.makespan}
        Path(args.schedule_out).write_text(json.dumps(payload, indent=2) + "\n",
                                           encoding="utf-8")
        logger.info("best schedule written to %s", args.schedule_out)
    print(batch.best_makespan)
    return 0


def cmd_delta_search(args) -> int:
    manifest = experiments.ExperimentManifest.from_file(args.manifest)
    if manifest.kind != "delta_table":
        raise _UsageError(f"delta-search expects a delta_table manifest, "
                          f"got kind {manifest.kind!r}")
    _log_config("delta-search", manifest.to_json())
    table = experiments.run_delta_table(manifest)
    for size in manifest.sizes:
        print(f"{size},{table.cells[size]:.2f}")
    return 0


def cmd_estimate(args) -> int:
    sizes = [int(token) for token in args.sizes.split(",") if token]
    _log_config("estimate", {"pool": str(args.pool), "sizes": sizes})
    pool = read_pool(args.pool)
    for size, estimate in estimate_curve(pool, sizes):
        print(f"{size},{estimate:g}")
    return 0


def cmd_experiment(args) -> int:
    manifest = experiments.ExperimentManifest.from_file(args.manifest)
    _log_config("experiment", manifest.to_json())
    if manifest.kind == "hypothesis":
        result = experiments.run_hypothesis(manifest)
        for label in result.labels:
            curve = result.curves[label]
            print(f"{label}: estimate({result.sizes[0]})={curve[0]:.3f} "
                  f"estimate({result.sizes[-1]})={curve[-1]:.3f}")
        print(f"crossing_size: {result.crossing_size}")
    elif manifest.kind == "delta_table":
        table = experiments.run_delta_table(manifest)
        for size in manifest.sizes:
            print(f"{size},{table.cells[size]:.2f}")
    else:
        rows = experiments.run_improvement(manifest)
        for row in rows:
            print(f"{row.sample_size},{row.best_delta:.2f},{row.mean_ours:.1f},"
                  f"{row.mean_stochastic:.1f},{row.mean_deterministic:.1f},"
                  f"{row.improvement_percent}")
    return 0


def cmd_validate(args) -> int:
    instance = read_instance_file(args.instance)
    payload = json.loads(Path(args.schedule).read_text(encoding="utf-8"))
    op_start = tuple(tuple(int(start) for start in row) for row in payload["op_start"])
    if "makespan" in payload:
        makespan = int(payload["makespan"])
    else:
        makespan = max(start + instance.proc_time[j][k]
                       for j, row in enumerate(op_start)
                       for k, start in enumerate(row))
    _log_config("validate", {"instance": str(args.instance),
                             "schedule": str(args.schedule)})
    report = validate_schedule(instance, Schedule(op_start=op_start, makespan=makespan))
    if report.ok:
        print(f"ok: makespan {report.recomputed_makespan}")
        return 0
    for violation in report.violations:
        print(f"violation: {violation}", file=sys.stderr)
    return 3


def cmd_protocol_check(args) -> int:
    if args.instance:
        instance = read_instance_file(args.instance)
    else:
        instance = fixtures.two_by_two()
    _log_config("protocol-check", {"endpoint": args.endpoint, "instance": instance.id,
                                   "exchanges": args.exchanges, "seed": args.seed})
    report = protocol.check_conformance(args.endpoint, instance,
                                        exchanges=args.exchanges, seed=args.seed,
                                        timeout=args.timeout)
    for step in report.steps:
        status = "PASS" if step.passed else "FAIL"
        detail = f" ({step.detail})" if step.detail else ""
        print(f"{status} {step.name}{detail}")
    return 0 if report.passed else 3


def build_parser() -> _Parser:
    parser = _Parser(prog="jobshop-sampling",
                     description="Construction sampling for job-shop scheduling.")
    commands = parser.add_subparsers(dest="subcommand", required=True)

    def add_policy_flags(sub):
        sub.add_argument("--policy", choices=POLICY_KINDS, default="uniform",
                         help="priority policy (default: uniform)")
        sub.add_argument("--temperature", type=float, default=1.0,
                         help="softmax temperature for the rule policies")
        sub.add_argument("--endpoint", default=None,
                         help="external policy endpoint (command line or tcp:HOST:PORT)")

    sub = commands.add_parser("generate", help="write seeded random instances")
    sub.add_argument("--jobs", type=int, required=True)
    sub.add_argument("--machines", type=int, required=True)
    sub.add_argument("--seed", type=int, required=True,
                     help="seed of the first instance; instance i uses seed+i")
    sub.add_argument("--count", type=int, default=1)
    sub.add_argument("--format", choices=FORMATS, default="orlib")
    sub.add_argument("--out", required=True, help="output directory")
    sub.set_defaults(func=cmd_generate)

    sub = commands.add_parser("sample", help="sample schedules for one instance")
    sub.add_argument("--instance", required=True)
    add_policy_flags(sub)
    sub.add_argument("--strategy", choices=sorted(STRATEGY_FLAGS), default="delta")
    sub.add_argument("--delta", type=float, default=1.0)
    sub.add_argument("--samples", type=int, default=1)
    sub.add_argument("--seed", type=int, required=True)
    sub.add_argument("--mode", choices=MODES, default=SEMI_ACTIVE)
    sub.add_argument("--parallelism", type=int, default=os.cpu_count() or 1)
    sub.add_argument("--out", default=".", help="directory for the pool CSV")
    sub.add_argument("--schedule-out", default=None,
                     help="also write the best schedule as JSON")
    sub.set_defaults(func=cmd_sample)

    sub = commands.add_parser("delta-search", help="run a delta_table manifest")
    sub.add_argument("--manifest", required=True)
    sub.set_defaults(func=cmd_delta_search)

    sub = commands.add_parser("estimate", help="best-of-s estimates from a pool CSV")
    sub.add_argument("--pool", required=True)
    sub.add_argument("--sizes", required=True, help="comma-separated window sizes")
    sub.set_defaults(func=cmd_estimate)

    sub = commands.add_parser("experiment", help="run an experiment manifest")
    sub.add_argument("--manifest", required=True)
    sub.set_defaults(func=cmd_experiment)

    sub = commands.add_parser("validate", help="check a schedule against an instance")
    sub.add_argument("--instance", required=True)
    sub.add_argument("--schedule", required=True, help="JSON file with op_start matrix")
    sub.set_defaults(func=cmd_validate)

    sub = commands.add_parser("protocol-check",
                              help="conformance-check an external policy endpoint")
    sub.add_argument("--endpoint", required=True)
    sub.add_argument("--instance", default=None,
                     help="instance file for the session (default: built-in 2x2)")
    sub.add_argument("--exchanges", type=int, default=100)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--timeout", type=float, default=protocol.DEFAULT_TIMEOUT)
    sub.set_defaults(func=cmd_protocol_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except (InstanceFormatError, PolicyValidationError) as err:
        print(f"validation error: {err}", file=sys.stderr)
        return 3
    except ValueError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except (JobShopError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - last-resort mapping to the exit contract
        logger.exception("unexpected failure")
        print(f"error: {err}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
