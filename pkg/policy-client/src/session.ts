import { PolicyAdapter, replyValues } from './adapters.js';
import {
  InstanceData,
  PROTOCOL_VERSION,
  ProtocolError,
  Reply,
  parseInstance,
  parsePrioritiesState,
} from './messages.js';

export interface SessionIo {
  send(reply: Reply): void;
  /** Close the transport once pending replies have flushed. */
  finish(exitCode: number): void;
}

/**
 * One protocol session: a serial request loop over a single line stream.
 * Transport-agnostic; the caller feeds lines in and wires `send`/`finish`
 * to stdio or a socket.
 */
export class PolicySession {
  private instance: InstanceData | null = null;

  constructor(
    private readonly adapter: PolicyAdapter,
    private readonly name: string,
    private readonly io: SessionIo,
  ) {}

  handleLine(line: string): void {
    const trimmed = line.trim();
    if (trimmed === '') {
      return;
    }
    let parsed: unknown;
    try {
      parsed = JSON.parse(trimmed);
    } catch {
      this.io.send({ type: 'error', message: 'request is not valid JSON' });
      return;
    }
    try {
      this.dispatch(parsed);
    } catch (error) {
      // Bad requests and misbehaving adapters both earn an error reply;
      // nothing a peer sends may take the stream down.
      const message =
        error instanceof ProtocolError ? error.message : `internal error: ${String(error)}`;
      this.io.send({ type: 'error', message });
    }
  }

  private dispatch(parsed: unknown): void {
    if (typeof parsed !== 'object' || parsed === null || Array.isArray(parsed)) {
      throw new ProtocolError('request is not a JSON object');
    }
    const message = parsed as Record<string, unknown>;
    switch (message.type) {
      case 'hello':
        this.hello(message);
        return;
      case 'priorities':
        this.priorities(message);
        return;
      case 'bye':
        this.io.finish(0);
        return;
      default:
        throw new ProtocolError(`unknown message type ${JSON.stringify(message.type)}`);
    }
  }

  private hello(message: Record<string, unknown>): void {
    if (message.protocol_version !== PROTOCOL_VERSION) {
      this.io.send({
        type: 'error',
        message: `unsupported protocol version ${JSON.stringify(message.protocol_version)}, this client speaks ${PROTOCOL_VERSION}`,
      });
      this.io.finish(1);
      return;
    }
    this.instance = parseInstance(message.instance);
    this.io.send({ type: 'hello_ack', protocol_version: PROTOCOL_VERSION, name: this.name });
  }

  private priorities(message: Record<string, unknown>): void {
    if (this.instance === null) {
      throw new ProtocolError('priorities request before hello');
    }
    const state = parsePrioritiesState(message, this.instance);
    const values = replyValues(this.adapter(state, this.instance), state.mask);
    this.io.send({ type: 'priorities', values });
  }
}
