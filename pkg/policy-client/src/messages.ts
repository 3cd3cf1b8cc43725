/**
 * Wire types and validation for the external-policy protocol.
 *
 * Messages are single JSON objects, one per line:
 *
 *   hello       -> hello_ack   (instance handshake, once per session)
 *   priorities  -> priorities  (one request, one reply, in order)
 *   bye         -> stream closes
 *
 * Anything malformed earns an `{ type: 'error', message }` reply and the
 * session keeps serving; only a protocol version mismatch ends the session.
 */

export const PROTOCOL_VERSION = 1;

export interface InstanceData {
  jobs: number;
  machines: number;
  machine_order: number[][];
  proc_time: number[][];
}

/** Dispatch state exactly as it crossed the wire. */
export interface PrioritiesState {
  next_op: number[];
  job_ready: number[];
  machine_ready: number[];
  mask: boolean[];
}

export interface HelloAck {
  type: 'hello_ack';
  protocol_version: number;
  name: string;
}

export interface PrioritiesReply {
  type: 'priorities';
  values: number[];
}

export interface ErrorReply {
  type: 'error';
  message: string;
}

export type Reply = HelloAck | PrioritiesReply | ErrorReply;

/** A bad request: answered with an error reply, never with a crash. */
export class ProtocolError extends Error {}

function isCount(value: unknown): value is number {
  return typeof value === 'number' && Number.isInteger(value) && value > 0;
}

function numberMatrix(value: unknown, rows: number, cols: number, label: string): number[][] {
  if (!Array.isArray(value) || value.length !== rows) {
    throw new ProtocolError(`${label} must be an array of ${rows} rows`);
  }
  return value.map((row) => {
    if (
      !Array.isArray(row) ||
      row.length !== cols ||
      !row.every((cell) => typeof cell === 'number' && Number.isFinite(cell))
    ) {
      throw new ProtocolError(`each ${label} row must hold ${cols} finite numbers`);
    }
    return row as number[];
  });
}

function numberArray(value: unknown, length: number, label: string): number[] {
  if (
    !Array.isArray(value) ||
    value.length !== length ||
    !value.every((cell) => typeof cell === 'number' && Number.isFinite(cell))
  ) {
    throw new ProtocolError(`${label} must hold ${length} finite numbers`);
  }
  return value as number[];
}

function booleanArray(value: unknown, length: number, label: string): boolean[] {
  if (!Array.isArray(value) || value.length !== length || !value.every((cell) => typeof cell === 'boolean')) {
    throw new ProtocolError(`${label} must hold ${length} booleans`);
  }
  return value as boolean[];
}

export function parseInstance(value: unknown): InstanceData {
  if (typeof value !== 'object' || value === null || Array.isArray(value)) {
    throw new ProtocolError('hello carries no instance object');
  }
  const record = value as Record<string, unknown>;
  if (!isCount(record.jobs) || !isCount(record.machines)) {
    throw new ProtocolError('instance jobs and machines must be positive integers');
  }
  const jobs = record.jobs;
  const machines = record.machines;
  return {
    jobs,
    machines,
    machine_order: numberMatrix(record.machine_order, jobs, machines, 'machine_order'),
    proc_time: numberMatrix(record.proc_time, jobs, machines, 'proc_time'),
  };
}

export function parsePrioritiesState(
  message: Record<string, unknown>,
  instance: InstanceData,
): PrioritiesState {
  const state: PrioritiesState = {
    next_op: numberArray(message.next_op, instance.jobs, 'next_op'),
    job_ready: numberArray(message.job_ready, instance.jobs, 'job_ready'),
    machine_ready: numberArray(message.machine_ready, instance.machines, 'machine_ready'),
    mask: booleanArray(message.mask, instance.jobs, 'mask'),
  };
  if (!state.mask.some(Boolean)) {
    throw new ProtocolError('mask marks no job as feasible');
  }
  return state;
}
