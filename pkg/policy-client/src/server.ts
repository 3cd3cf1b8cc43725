#!/usr/bin/env node
/**
 * Reference external-policy server.
 *
 * Serves priority values to a scheduling engine over the line-delimited
 * JSON protocol, on stdio by default or as a TCP server with `--port`.
 * Policies are pluggable: built-in rules via `--policy`, or any module
 * default-exporting an adapter function via `--adapter`.
 */

import * as net from 'node:net';
import * as path from 'node:path';
import * as readline from 'node:readline';
import { pathToFileURL } from 'node:url';

import { ADAPTERS, PolicyAdapter } from './adapters.js';
import { Reply } from './messages.js';
import { PolicySession, SessionIo } from './session.js';

const USAGE =
  'usage: server.js [--policy uniform|spt|mwkr] [--adapter module.js] [--name NAME] [--port N]';

export interface Options {
  policy: string;
  adapterPath: string | null;
  name: string;
  port: number | null;
}

export function parseArgs(argv: string[]): Options {
  const options: Options = { policy: 'uniform', adapterPath: null, name: 'policy-client', port: null };
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) {
      throw new Error(`${flag} needs a value`);
    }
    switch (flag) {
      case '--policy':
        if (!(value in ADAPTERS)) {
          throw new Error(`unknown policy ${value}, expected one of ${Object.keys(ADAPTERS).join('|')}`);
        }
        options.policy = value;
        break;
      case '--adapter':
        options.adapterPath = value;
        break;
      case '--name':
        options.name = value;
        break;
      case '--port': {
        const port = Number(value);
        if (!Number.isInteger(port) || port < 0 || port > 65535) {
          throw new Error(`bad port ${value}`);
        }
        options.port = port;
        break;
      }
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  return options;
}

async function resolveAdapter(options: Options): Promise<PolicyAdapter> {
  if (options.adapterPath === null) {
    return ADAPTERS[options.policy];
  }
  const module = await import(pathToFileURL(path.resolve(options.adapterPath)).href);
  if (typeof module.default !== 'function') {
    throw new Error(`${options.adapterPath} does not default-export an adapter function`);
  }
  return module.default as PolicyAdapter;
}

function serveStdio(adapter: PolicyAdapter, name: string): void {
  const io: SessionIo = {
    send: (reply: Reply) => {
      process.stdout.write(`${JSON.stringify(reply)}\n`);
    },
    // The empty write sequences the exit behind every pending reply, so
    // the final line is never lost in the pipe buffer.
    finish: (code: number) => {
      process.stdout.write('', () => process.exit(code));
    },
  };
  const session = new PolicySession(adapter, name, io);
  const lines = readline.createInterface({ input: process.stdin, terminal: false });
  lines.on('line', (line) => session.handleLine(line));
  lines.on('close', () => process.exit(0));
}

function serveTcp(adapter: PolicyAdapter, name: string, port: number): void {
  const server = net.createServer((socket) => {
    socket.on('error', () => socket.destroy());
    const io: SessionIo = {
      send: (reply: Reply) => {
        socket.write(`${JSON.stringify(reply)}\n`);
      },
      // A finished session closes its connection; the server stays up for
      // the next one, which is how an engine pools parallel sessions.
      finish: () => socket.end(),
    };
    const session = new PolicySession(adapter, name, io);
    const lines = readline.createInterface({ input: socket, terminal: false });
    lines.on('line', (line) => session.handleLine(line));
  });
  server.listen(port, '127.0.0.1', () => {
    const address = server.address() as net.AddressInfo;
    process.stderr.write(`listening on tcp:127.0.0.1:${address.port}\n`);
  });
}

export async function main(argv: string[] = process.argv.slice(2)): Promise<void> {
  let options: Options;
  try {
    options = parseArgs(argv);
  } catch (error) {
    process.stderr.write(`${(error as Error).message}\n${USAGE}\n`);
    process.exit(1);
  }
  const adapter = await resolveAdapter(options).catch((error: Error): never => {
    process.stderr.write(`${error.message}\n`);
    process.exit(1);
  });
  if (options.port === null) {
    serveStdio(adapter, options.name);
  } else {
    serveTcp(adapter, options.name, options.port);
  }
}

const entry = process.argv[1] ? pathToFileURL(path.resolve(process.argv[1])).href : '';
if (import.meta.url === entry) {
  void main();
}
