import { InstanceData, PrioritiesState, ProtocolError } from './messages.js';

/**
 * Maps the raw dispatch state (plus the handshaken instance) to one
 * nonnegative priority per job.  Adapters see exactly what crossed the
 * wire, so a model adapter can derive whatever features it wants; values
 * for infeasible jobs are zeroed before the reply is sent.
 */
export type PolicyAdapter = (state: PrioritiesState, instance: InstanceData) => number[];

export const uniform: PolicyAdapter = (state) => state.mask.map(() => 1);

/** Shorter next operation, higher priority. */
export const shortestProcessingTime: PolicyAdapter = (state, instance) =>
  state.next_op.map((op, job) => (op < instance.machines ? 1 / instance.proc_time[job][op] : 0));

/** More unfinished processing time, higher priority. */
export const mostWorkRemaining: PolicyAdapter = (state, instance) =>
  state.next_op.map((op, job) => {
    let remaining = 0;
    for (let k = op; k < instance.machines; k += 1) {
      remaining += instance.proc_time[job][k];
    }
    return remaining;
  });

export const ADAPTERS: Record<string, PolicyAdapter> = {
  uniform,
  spt: shortestProcessingTime,
  mwkr: mostWorkRemaining,
};

/**
 * Enforces the reply contract on an adapter's output: one finite
 * nonnegative number per job, zero off the mask, positive somewhere on it.
 * Violations become error replies rather than nonconforming values.
 */
export function replyValues(raw: unknown, mask: boolean[]): number[] {
  if (!Array.isArray(raw) || raw.length !== mask.length) {
    throw new ProtocolError(`adapter returned ${Array.isArray(raw) ? raw.length : 'no'} values, expected ${mask.length}`);
  }
  const values = raw.map((value, job) => {
    if (typeof value !== 'number' || !Number.isFinite(value)) {
      throw new ProtocolError(`adapter value ${job} is not a finite number`);
    }
    if (value < 0) {
      throw new ProtocolError(`adapter value ${job} is negative`);
    }
    return mask[job] ? value : 0;
  });
  if (!values.some((value) => value > 0)) {
    throw new ProtocolError('adapter produced no positive value on the mask');
  }
  return values;
}
