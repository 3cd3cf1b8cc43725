import { ChildProcessWithoutNullStreams, spawn } from 'node:child_process';
import * as net from 'node:net';
import * as readline from 'node:readline';
import { fileURLToPath } from 'node:url';

export const SERVER_PATH = fileURLToPath(new URL('../dist/server.js', import.meta.url));

/** 2 jobs x 2 machines, the fixture every protocol example uses. */
export const INSTANCE = {
  jobs: 2,
  machines: 2,
  machine_order: [
    [0, 1],
    [1, 0],
  ],
  proc_time: [
    [3, 2],
    [2, 4],
  ],
};

export function helloMessage(version = 1): Record<string, unknown> {
  return { type: 'hello', protocol_version: version, instance: INSTANCE };
}

export function prioritiesRequest(overrides: Record<string, unknown> = {}): Record<string, unknown> {
  return {
    type: 'priorities',
    next_op: [0, 0],
    job_ready: [0, 0],
    machine_ready: [0, 0],
    mask: [true, true],
    ...overrides,
  };
}

/** A built server process plus line-at-a-time access to its stdout. */
export class SpawnedServer {
  readonly child: ChildProcessWithoutNullStreams;
  private readonly replies: AsyncIterator<string>;

  constructor(args: string[] = []) {
    this.child = spawn(process.execPath, [SERVER_PATH, ...args]);
    const lines = readline.createInterface({ input: this.child.stdout });
    this.replies = lines[Symbol.asyncIterator]();
  }

  send(message: unknown): void {
    this.child.stdin.write(`${JSON.stringify(message)}\n`);
  }

  sendRaw(line: string): void {
    this.child.stdin.write(`${line}\n`);
  }

  async reply(): Promise<Record<string, unknown>> {
    const next = await this.replies.next();
    if (next.done) {
      throw new Error('server closed stdout before replying');
    }
    return JSON.parse(next.value) as Record<string, unknown>;
  }

  exitCode(): Promise<number | null> {
    return new Promise((resolve) => this.child.once('exit', (code) => resolve(code)));
  }

  async listeningPort(): Promise<number> {
    const lines = readline.createInterface({ input: this.child.stderr });
    for await (const line of lines) {
      const match = line.match(/listening on tcp:127\.0\.0\.1:(\d+)/);
      if (match) {
        lines.close();
        return Number(match[1]);
      }
    }
    throw new Error('server never reported a listening port');
  }

  stop(): void {
    this.child.kill('SIGKILL');
  }
}

/** One TCP connection speaking the protocol, mirroring SpawnedServer. */
export class TcpClient {
  private constructor(
    private readonly socket: net.Socket,
    private readonly replies: AsyncIterator<string>,
  ) {}

  static async connect(port: number): Promise<TcpClient> {
    const socket = net.createConnection({ host: '127.0.0.1', port });
    await new Promise<void>((resolve, reject) => {
      socket.once('connect', resolve);
      socket.once('error', reject);
    });
    const lines = readline.createInterface({ input: socket });
    return new TcpClient(socket, lines[Symbol.asyncIterator]());
  }

  send(message: unknown): void {
    this.socket.write(`${JSON.stringify(message)}\n`);
  }

  async reply(): Promise<Record<string, unknown>> {
    const next = await this.replies.next();
    if (next.done) {
      throw new Error('peer closed the connection before replying');
    }
    return JSON.parse(next.value) as Record<string, unknown>;
  }

  closed(): Promise<void> {
    return new Promise((resolve) => {
      if (this.socket.closed) {
        resolve();
      } else {
        this.socket.once('close', () => resolve());
      }
    });
  }

  destroy(): void {
    this.socket.destroy();
  }
}
